"""Leaf reduction along a rectified generator ``Y = d/dy``.

Given fields ``W_j`` without a ``d/dy`` component and the connection
``[Y, W_j] = sum_i A_ij W_i``, the combinations ``Z_i = sum_j mu_ij W_j``
commute with ``Y`` when each row ``mu_i`` solves ``mu_i' = -A mu_i`` with
``mu_i(0) = e_i``.  For ``A`` constant in ``y`` the stacked rows are
``exp(-y A^T)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .geometry import VectorField, _module_solve, lie_bracket
from .polyring import Polynomial

__all__ = [
    "ConnectionError_",
    "SplitResult",
    "extract_connection",
    "leaf_split",
    "verify_split",
    "y_variable",
]


class ConnectionError_(ValueError):
    """No polynomial connection matrix within the degree bound."""


def y_variable(Y: VectorField) -> str:
    """Name of ``y`` when ``Y == d/dy``; raises otherwise."""
    ones = [v for v, c in zip(Y.variables, Y.components) if not c.is_zero]
    if len(ones) != 1 or Y.components[Y.variables.index(ones[0])] != Polynomial.constant(Y.variables, 1):
        raise ValueError(f"Y = {Y} is not a coordinate field d/dy")
    return ones[0]


def extract_connection(Y: VectorField, W: Sequence[VectorField], degree_bound: int = 4) -> list[list[Polynomial]]:
    """Polynomial ``A`` with ``[Y, W_j] = sum_i A[i][j] W_i``.

    Raises
    ------
    ConnectionError_
        Some bracket has no polynomial solution of degree <= ``degree_bound``.
    """
    y = y_variable(Y)
    yi = Y.variables.index(y)
    for j, w in enumerate(W):
        if not w.components[yi].is_zero:
            raise ValueError(f"W[{j}] has a nonzero d/d{y} component")
    s = len(W)
    zero = Polynomial.zero(Y.variables)
    A = [[zero] * s for _ in range(s)]
    for j, w in enumerate(W):
        b = lie_bracket(Y, w)
        if b.is_zero:
            continue
        coeffs = _module_solve(b, list(W), degree_bound)
        if coeffs is None:
            raise ConnectionError_(f"[Y, W[{j}]] = {b} has no polynomial expansion of degree <= {degree_bound} in W")
        for i in range(s):
            A[i][j] = coeffs[i]
    return A


def _uniform_y_grid(span, n):
    a, b = float(span[0]), float(span[1])
    if not a <= 0.0 <= b or a == b:
        raise ValueError("y_span must contain 0 in its interior or as an endpoint")
    h = (b - a) / (n - 1)
    k0 = int(round(-a / h))
    return (np.arange(n) - k0) * h, k0


def _as_field_fn(w, variables):
    if isinstance(w, VectorField):
        return w.evaluate_float
    return lambda x: np.asarray(w(x), dtype=float)


def _as_matrix_fn(A, variables, s):
    if callable(A):
        return lambda x: np.asarray(A(x), dtype=float).reshape(s, s)
    A = list(A)
    if A and isinstance(A[0][0], Polynomial):
        return lambda x: np.array([[a.evaluate_float(x) for a in row] for row in A])
    const = np.asarray(A, dtype=float).reshape(s, s)
    return lambda x: const


@dataclass
class SplitResult:
    Y: VectorField | None
    variables: tuple
    y_var: str
    y_grid: np.ndarray
    z_grid: list
    mu_grid: np.ndarray  # shape (*z_shape, n_y, s, s)
    W: list = field(repr=False, default_factory=list)
    commutator_residual: float = 0.0
    truncated: bool = False
    rank_ok: bool | None = None

    @property
    def s(self) -> int:
        return self.mu_grid.shape[-1]

    def _point(self, y, z):
        x = np.empty(len(self.variables))
        yi = self.variables.index(self.y_var)
        x[yi] = y
        x[[i for i in range(len(self.variables)) if i != yi]] = z
        return x

    def mu(self, y: float, z) -> np.ndarray:
        """Interpolated ``mu(y, z)``: cubic in ``y``, multilinear in ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        zshape = self.mu_grid.shape[:-3]
        ny, s = self.mu_grid.shape[-3], self.s
        flat = self.mu_grid.reshape(-1, ny, s * s)
        vals = np.array([CubicSpline(self.y_grid, f, axis=0)(y) for f in flat]).reshape(zshape + (s * s,))
        if not zshape:
            return vals.reshape(s, s)
        axes = [g for g in self.z_grid]
        # singleton axes cannot be interpolated over; drop them
        keep = [i for i, g in enumerate(axes) if len(g) > 1]
        v = vals.reshape([len(g) for g in axes] + [s * s])
        v = v[tuple(slice(None) if i in keep else 0 for i in range(len(axes)))]
        if not keep:
            return v.reshape(s, s)
        interp = RegularGridInterpolator([axes[i] for i in keep], v, method="linear")
        return interp(z[keep])[0].reshape(s, s)

    def Z(self, i: int) -> Callable:
        """Numeric field ``Z_i(x) = sum_j mu_ij W_j(x)``."""
        fns = [_as_field_fn(w, self.variables) for w in self.W]
        yi = self.variables.index(self.y_var)

        def Zi(x):
            x = np.asarray(x, dtype=float)
            z = np.delete(x, yi)
            m = self.mu(x[yi], z)
            return sum(m[i, j] * fns[j](x) for j in range(len(fns)))

        return Zi

    def Z_on_grid(self) -> np.ndarray:
        """``Z_i`` at every grid node from the stored ``mu``; shape (*z, n_y, s, m)."""
        fns = [_as_field_fn(w, self.variables) for w in self.W]
        zshape = self.mu_grid.shape[:-3]
        ny, s = self.mu_grid.shape[-3], self.s
        out = np.empty(zshape + (ny, s, len(self.variables)))
        for zi in itertools.product(*[range(n) for n in zshape]):
            z = np.array([self.z_grid[a][k] for a, k in enumerate(zi)])
            for k, y in enumerate(self.y_grid):
                x = self._point(y, z)
                Wv = np.array([f(x) for f in fns])
                out[zi + (k,)] = self.mu_grid[zi + (k,)] @ Wv
        return out

    def recompute_residual(self) -> float:
        """Max over the grid of |d/dy Z_i| by five-point differences in ``y``."""
        if self.s == 0:
            self.commutator_residual = 0.0
            return 0.0
        Zg = self.Z_on_grid()
        h = self.y_grid[1] - self.y_grid[0]
        ax = Zg.ndim - 3
        n = Zg.shape[ax]
        if n < 5:
            raise ValueError("need at least 5 y nodes for the commutator residual")
        sl = lambda a, b: tuple([slice(None)] * ax + [slice(a, n + b if b <= 0 else b)])
        d = (Zg[sl(0, -4)] - 8 * Zg[sl(1, -3)] + 8 * Zg[sl(3, -1)] - Zg[sl(4, 0)]) / (12 * h)
        self.commutator_residual = float(np.max(np.linalg.norm(d, axis=-1)))
        return self.commutator_residual


def leaf_split(
    Y: VectorField,
    W: Sequence,
    A,
    z_grid: Sequence,
    y_span=(-1.0, 1.0),
    rtol: float = 1e-12,
    y_nodes: int = 41,
    variables: Sequence[str] | None = None,
    y_var: str | None = None,
) -> SplitResult:
    """Solve ``mu_i' = -A mu_i``, ``mu(0) = I`` in ``y`` at each ``z`` node.

    Parameters
    ----------
    Y : VectorField
        The rectified generator ``d/dy``.  May be ``None`` if ``variables``
        and ``y_var`` are given.
    W : sequence of VectorField or callables ``x -> vector``
    A : matrix of Polynomial, constant array, or callable ``x -> (s, s)``
    z_grid : one 1-D array per non-``y`` variable, in variable order
    y_span : (a, b) with ``a <= 0 <= b``
        Sampled on a uniform grid through ``y = 0``.
    """
    if Y is not None:
        variables = Y.variables
        y_var = y_variable(Y)
    if variables is None or y_var is None:
        raise ValueError("variables and y_var are required without Y")
    variables = tuple(variables)
    s = len(W)
    yi = variables.index(y_var)
    y_grid, k0 = _uniform_y_grid(y_span, y_nodes)
    zg = [np.asarray(g, dtype=float) for g in z_grid]
    if len(zg) != len(variables) - 1:
        raise ValueError(f"z_grid needs {len(variables) - 1} axes")
    zshape = tuple(len(g) for g in zg)
    mu_grid = np.zeros(zshape + (y_nodes, s, s))
    Afn = _as_matrix_fn(A, variables, s) if s else None
    truncated = False
    for zi in itertools.product(*[range(n) for n in zshape]):
        z = np.array([zg[a][k] for a, k in enumerate(zi)])
        if s == 0:
            continue

        def rhs(y, m, _z=z):
            x = np.empty(len(variables))
            x[yi] = y
            x[[i for i in range(len(variables)) if i != yi]] = _z
            M = m.reshape(s, s)
            return (-M @ Afn(x).T).ravel()

        mu_grid[zi + (k0,)] = np.eye(s)
        for idx in (slice(k0 + 1, None), slice(k0 - 1, None, -1) if k0 > 0 else slice(0, 0)):
            ys = y_grid[idx]
            if len(ys) == 0:
                continue
            sol = solve_ivp(rhs, (0.0, ys[-1]), np.eye(s).ravel(), method="DOP853", t_eval=ys, rtol=rtol, atol=rtol * 1e-2)
            got = sol.y.T.reshape(-1, s, s)
            if not sol.success or len(got) < len(ys) or not np.all(np.isfinite(got)) or np.max(np.abs(got)) > 1e12:
                truncated = True
            target = np.arange(y_nodes)[idx][: len(got)]
            mu_grid[zi][target] = got
    res = SplitResult(Y, variables, y_var, y_grid, zg, mu_grid, list(W), 0.0, truncated)
    if s:
        res.recompute_residual()
    return res


def verify_split(result: SplitResult, tol: float = 1e-6, rank_tol: float = 1e-8) -> bool:
    """Residual below ``tol`` and rank of {Y, Z} equal to rank of {Y, W} at every node."""
    if result.s == 0:
        result.rank_ok = True
        return True
    fns = [_as_field_fn(w, result.variables) for w in result.W]
    Zg = result.Z_on_grid()
    yvec = np.zeros(len(result.variables))
    yvec[result.variables.index(result.y_var)] = 1.0
    zshape = result.mu_grid.shape[:-3]
    ok = True
    for zi in itertools.product(*[range(n) for n in zshape]):
        z = np.array([result.z_grid[a][k] for a, k in enumerate(zi)])
        for k, y in enumerate(result.y_grid):
            x = result._point(y, z)
            Wm = np.vstack([yvec] + [f(x) for f in fns])
            Zm = np.vstack([yvec, Zg[zi + (k,)]])
            rw = np.linalg.matrix_rank(Wm, tol=rank_tol)
            rz = np.linalg.matrix_rank(Zm, tol=rank_tol)
            if rw != rz:
                ok = False
    result.rank_ok = ok
    return ok and result.commutator_residual < tol
