"""The analytic branch alpha = h(s) of (1 + s^2) cos(alpha) sin(alpha) = alpha.

``h(s) = s U(s)`` with ``U(0) = sqrt(6)/2``; ``h`` is odd in ``s``.  Values
come from a Newton solve, memoized on a Hermite grid over ``[0, 0.49]``
(the range of ``s = x^2 + y^2`` used by the counterexample charts).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "U0",
    "S_MAX",
    "HSolution",
    "HConvergenceError",
    "HDomainError",
    "lemma_residual",
    "solve_h",
    "h_prime",
    "h_values",
    "h_prime_values",
    "h_grid",
]

U0 = math.sqrt(6.0) / 2.0
S_MAX = 0.7  # validated Newton basin, see solve_h
GRID_MAX = 0.49
GRID_NODES = 491


class HConvergenceError(RuntimeError):
    pass


class HDomainError(ValueError):
    pass


@dataclass(frozen=True)
class HSolution:
    s: float
    h: float
    U: float
    residual: float
    iterations: int


def lemma_residual(alpha, s):
    """``(1 + s^2) cos(alpha) sin(alpha) - alpha``."""
    return (1.0 + s * s) * np.cos(alpha) * np.sin(alpha) - alpha


def _dF_dalpha(alpha, s):
    # (1+s^2) cos(2a) - 1 written without cancellation
    return s * s * np.cos(2.0 * alpha) - 2.0 * np.sin(alpha) ** 2


def solve_h(s: float, alpha0: float | None = None, max_iter: int = 50, tol: float = 1e-12) -> HSolution:
    """Newton solve for the nonzero root near ``s*sqrt(6)/2``.

    Parameters
    ----------
    s : float
        Must satisfy ``|s| <= 0.7``.
    alpha0 : float, optional
        Starting guess; defaults to ``s*sqrt(6)/2``.  Starting from the
        negative guess converges to the mirrored root ``-h(s)``.
    """
    s = float(s)
    if abs(s) > S_MAX:
        raise HDomainError(f"s={s} outside the validated branch window |s| <= {S_MAX}")
    if s == 0.0 and (alpha0 is None or alpha0 == 0.0):
        return HSolution(0.0, 0.0, U0, 0.0, 0)
    alpha = U0 * s if alpha0 is None else float(alpha0)
    last = math.inf
    for it in range(1, max_iter + 1):
        f = lemma_residual(alpha, s)
        if abs(f) <= 1e-15 * abs(alpha):
            break
        d = _dF_dalpha(alpha, s)
        if d == 0.0:
            raise HConvergenceError(f"zero derivative at alpha={alpha}, s={s}")
        step = f / d
        # stagnation means the iterate sits at rounding level
        if it > 3 and abs(step) >= last:
            break
        alpha -= step
        last = abs(step)
    else:
        raise HConvergenceError(f"Newton did not converge for s={s} in {max_iter} iterations")
    res = abs(float(lemma_residual(alpha, s)))
    if res >= tol:
        raise HConvergenceError(f"residual {res:.3e} above {tol} for s={s}")
    U = alpha / s if s != 0.0 else U0
    return HSolution(s, float(alpha), float(U), res, it)


def h_prime(s: float, h: float | None = None) -> float:
    """Derivative by implicit differentiation; equals ``U0`` at ``s = 0``."""
    if abs(s) < 1e-8:
        return U0
    if h is None:
        h = solve_h(s).h
    return float(-s * np.sin(2.0 * h) / _dF_dalpha(h, s))


def _newton_vec(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    alpha = U0 * s
    small = np.abs(s) < 1e-12
    for _ in range(50):
        f = lemma_residual(alpha, s)
        done = small | (np.abs(f) <= 1e-15 * np.abs(alpha))
        if np.all(done):
            break
        d = np.where(done, 1.0, _dF_dalpha(alpha, s))
        alpha = alpha - np.where(done, 0.0, f / d)
    return np.where(small, U0 * s, alpha)


class _HGrid:
    """Lazily built Hermite interpolant of h on [0, GRID_MAX]."""

    def __init__(self):
        self._spline = None
        self._lock = threading.Lock()

    def spline(self):
        if self._spline is None:
            with self._lock:
                if self._spline is None:
                    nodes = np.linspace(0.0, GRID_MAX, GRID_NODES)
                    vals = _newton_vec(nodes)
                    ders = np.array([h_prime(s, a) for s, a in zip(nodes, vals)])
                    self._spline = CubicHermiteSpline(nodes, vals, ders)
        return self._spline


h_grid = _HGrid()


def h_values(s):
    """Vectorized h; interpolated on the memo grid, Newton outside it."""
    arr = np.asarray(s, dtype=float)
    if np.any(np.abs(arr) > S_MAX):
        raise HDomainError(f"h evaluated outside |s| <= {S_MAX}")
    a = np.abs(arr)
    inside = a <= GRID_MAX
    out = np.empty_like(a)
    if np.any(inside):
        out[inside] = h_grid.spline()(a[inside])
    if np.any(~inside):
        out[~inside] = _newton_vec(a[~inside])
    out = np.sign(arr) * out
    return out if out.ndim else float(out)


def h_prime_values(s):
    arr = np.asarray(s, dtype=float)
    hv = np.asarray(h_values(arr), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = -arr * np.sin(2.0 * hv) / _dF_dalpha(hv, arr)
    out = np.where(np.abs(arr) < 1e-8, U0, d)
    return out if out.ndim else float(out)
