"""Orbits, section returns and sub-Riemannian costs.

Polynomial fields run on the compiled DOPRI5 kernel; closed-form fields
use the Python integrator with the same step control.  Return times are
located on the dense output and then refined by re-integrating from the
preceding accepted node, so they do not inherit the interpolation error.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .analytic import AnalyticField, AnalyticMap, DomainError, PackedPoly
from .geometry import VectorField
from .polyring import Ideal, Polynomial

__all__ = [
    "Trajectory",
    "CrossingReport",
    "DeltaReport",
    "SRQuery",
    "BallProbeReport",
    "IntegrationError",
    "NotOnXError",
    "SingularStartError",
    "integrate",
    "detect_returns",
    "estimate_flowbox_delta",
    "sr_distance",
    "sr_ball_probe",
    "Constraints",
    "as_field",
]

RTOL, ATOL = 1e-9, 1e-12
CROSS_TOL = 1e-7
TIME_TOL = 1e-10
SING_TOL = 1e-9


class IntegrationError(RuntimeError):
    pass


class NotOnXError(ValueError):
    pass


class SingularStartError(ValueError):
    pass


# ---------------------------------------------------------------- fields


class _Field:
    """Uniform evaluation wrapper around the accepted field types."""

    def __init__(self, f, dim: int):
        self.dim = dim
        self.packed: PackedPoly | None = None
        self.lo = self.hi = None
        self._guard = None
        if isinstance(f, _Field):
            self.__dict__.update(f.__dict__)
            return
        if isinstance(f, VectorField):
            self.packed = PackedPoly.from_polynomials(f.components, f.dim)
            self._f = lambda x: kernels.poly_eval(self.packed.exps, self.packed.coef, self.packed.comp, self.dim, x)
            self._batch = lambda X: kernels.poly_eval_batch(self.packed.exps, self.packed.coef, self.packed.comp, self.dim, X)
        elif isinstance(f, AnalyticField):
            self.packed = f.packed
            if f.domain is not None:
                self.lo, self.hi = f.domain
            self._guard = f.singular_guard
            if self.packed is not None:
                pk = self.packed
                self._f = lambda x: kernels.poly_eval(pk.exps, pk.coef, pk.comp, self.dim, x)
                self._batch = lambda X: kernels.poly_eval_batch(pk.exps, pk.coef, pk.comp, self.dim, X)
            else:
                self._f = f
                self._batch = f
        elif callable(f):
            self._f = lambda x: np.asarray(f(x), dtype=float)
            self._batch = lambda X: np.array([self._f(x) for x in X])
        else:
            raise TypeError(f"cannot use {type(f).__name__} as a vector field")

    def __call__(self, x):
        if self._guard is not None:
            self._guard(np.asarray(x, dtype=float))
        return self._f(x)

    def batch(self, X):
        if self._guard is not None:
            self._guard(np.asarray(X, dtype=float))
        return self._batch(X)

    def in_domain(self, x) -> bool:
        if self.lo is None:
            return True
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


def as_field(f, dim: int) -> _Field:
    return f if isinstance(f, _Field) else _Field(f, dim)


class Constraints:
    """Values and Jacobian of a list of scalar functions (the equations of X).

    Accepts an :class:`Ideal`, a list of :class:`Polynomial`, an
    :class:`AnalyticMap`, or callables (each scalar, or one vector-valued).
    Callables get central-difference Jacobians.
    """

    def __init__(self, evals, dim: int):
        self.dim = dim
        if isinstance(evals, Constraints):
            self.__dict__.update(evals.__dict__)
            return
        if isinstance(evals, Ideal):
            evals = list(evals.generators)
        if isinstance(evals, AnalyticMap):
            amap = evals
            self.count = len(amap)
            self._values = lambda x: amap(x)
            self._jac = amap.jacobian_at
        elif isinstance(evals, (list, tuple)) and evals and all(isinstance(g, Polynomial) for g in evals):
            gens = list(evals)
            pk = PackedPoly.from_polynomials(gens, dim)
            grads = [g.diff(v) for g in gens for v in gens[0].variables]
            gpk = PackedPoly.from_polynomials(grads, dim)
            self.count = len(gens)
            self._values = lambda x: kernels.poly_eval(pk.exps, pk.coef, pk.comp, len(gens), x)
            self._jac = lambda x: kernels.poly_eval(gpk.exps, gpk.coef, gpk.comp, len(grads), x).reshape(len(gens), dim)
        elif callable(evals):
            fn = evals
            self.count = int(np.size(fn(np.zeros(dim))))
            self._values = lambda x: np.atleast_1d(np.asarray(fn(x), dtype=float))
            self._jac = self._fd_jac
        else:
            fns = list(evals)
            self.count = len(fns)
            self._values = lambda x: np.array([float(g(x)) for g in fns])
            self._jac = self._fd_jac

    def _fd_jac(self, x):
        x = np.asarray(x, dtype=float)
        J = np.empty((self.count, self.dim))
        for j in range(self.dim):
            h = 1e-6 * max(1.0, abs(x[j]))
            e = np.zeros(self.dim)
            e[j] = h
            J[:, j] = (self._values(x + e) - self._values(x - e)) / (2 * h)
        return J

    def __call__(self, x) -> np.ndarray:
        return self._values(np.asarray(x, dtype=float))

    def jacobian(self, x) -> np.ndarray:
        return self._jac(np.asarray(x, dtype=float))

    def project(self, x0, tol: float, max_iter: int = 50):
        """Gauss-Newton projection onto the zero set; ``None`` on divergence."""
        x = np.array(x0, dtype=float)
        for _ in range(max_iter):
            r = self(x)
            if np.max(np.abs(r), initial=0.0) < tol:
                return x
            step, *_ = np.linalg.lstsq(self.jacobian(x), r, rcond=None)
            x = x - step
            if not np.all(np.isfinite(x)):
                return None
        return x if np.max(np.abs(self(x)), initial=0.0) < tol else None


# ---------------------------------------------------------------- integration


@dataclass
class Trajectory:
    """Accepted integrator nodes with cubic Hermite dense output.

    ``times`` are strictly increasing, also for backward runs.
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    errors: np.ndarray
    status: int = 0
    rtol: float = RTOL
    atol: float = ATOL
    _field: _Field | None = field(default=None, repr=False)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def truncated(self) -> bool:
        return self.status != kernels.OK

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return len(self.times)

    def __call__(self, t):
        """Hermite interpolation; exact at the nodes."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        if np.any(tt < self.times[0] - 1e-12) or np.any(tt > self.times[-1] + 1e-12):
            raise ValueError("time outside the integrated interval")
        if len(self.times) == 1:
            out = np.repeat(self.states[:1], len(tt), axis=0)
            return out[0] if scalar else out
        k = np.clip(np.searchsorted(self.times, tt, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        h = (t1 - t0)[:, None]
        s = ((tt - t0) / (t1 - t0))[:, None]
        y0, y1 = self.states[k], self.states[k + 1]
        f0, f1 = self.derivatives[k], self.derivatives[k + 1]
        s2, s3 = s * s, s * s * s
        out = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1
        exact = tt == self.times[k]
        out[exact] = y0[exact]
        exact1 = tt == self.times[k + 1]
        out[exact1] = y1[exact1]
        return out[0] if scalar else out

    def state_at(self, t: float) -> np.ndarray:
        """State at ``t`` by re-integrating from the preceding node."""
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 1))
        dt = t - self.times[k]
        if dt <= 0.0 or self._field is None:
            return self.states[k].copy() if dt <= 0.0 else self(t)
        sub = _run(self._field, self.states[k], dt, self.rtol, self.atol)
        return sub.states[-1]


def _run(F: _Field, p0, span: float, rtol, atol, hmax=math.inf, max_steps=200000):
    """Forward run over ``[0, span]``; ``span`` may be negative."""
    sign = 1.0 if span >= 0 else -1.0
    span = abs(span)
    lo = F.lo if F.lo is not None else None
    hi = F.hi if F.hi is not None else None
    p0 = np.asarray(p0, dtype=float)
    hit = {"domain": False}
    if F.packed is not None and F._guard is None:
        pk = F.packed
        ts, ys, fs, errs, status = kernels.dopri5_poly(
            pk.exps, np.ascontiguousarray(pk.coef * sign), pk.comp, p0, 0.0, span, rtol, atol, 0.0, hmax, max_steps, lo, hi
        )
    else:
        def rhs(_t, y):
            try:
                return sign * F(y)
            except DomainError:
                hit["domain"] = True
                return np.full(F.dim, np.nan)

        ts, ys, fs, errs, status = kernels.dopri5(rhs, p0, 0.0, span, rtol, atol, 0.0, hmax, max_steps, lo, hi)
        if status == kernels.STEP_UNDERFLOW and hit["domain"]:
            status = kernels.DOMAIN_EXIT
    if status == kernels.STEP_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={sign * ts[-1]:.6g}")
    times = sign * ts
    fs = sign * fs
    if sign < 0:
        times, ys, fs, errs = times[::-1], ys[::-1], fs[::-1], errs[::-1]
    return Trajectory(np.ascontiguousarray(times), np.ascontiguousarray(ys), np.ascontiguousarray(fs), np.ascontiguousarray(errs), status, rtol, atol, F)


def integrate(field, p0, t_end: float, rtol: float = RTOL, atol: float = ATOL, hmax: float = math.inf, max_steps: int = 200000) -> Trajectory:
    """Integrate from ``p0`` at ``t = 0`` to ``t_end`` (negative runs backward).

    Returns a :class:`Trajectory` whose ``times`` increase in both cases.
    Leaving the field's declared domain truncates the trajectory and sets
    ``status`` to ``DOMAIN_EXIT``; step-size underflow raises
    :class:`IntegrationError`.
    """
    p0 = np.asarray(p0, dtype=float)
    F = as_field(field, p0.size)
    if not F.in_domain(p0):
        raise DomainError(f"start point {p0.tolist()} outside the field's domain")
    F(p0)  # raises DomainError for guarded fields
    return _run(F, p0, float(t_end), rtol, atol, hmax, max_steps)


# ---------------------------------------------------------------- returns


@dataclass
class CrossingReport:
    start: np.ndarray
    times: list
    residuals: list
    min_return: float | None
    delta_max: float
    tol: float = CROSS_TOL

    @property
    def returned(self) -> bool:
        return self.min_return is not None


def _gn_polish(G: Constraints, F: _Field, traj: Trajectory, t: float, lo: float, hi: float, iters: int = 4):
    best_t, best_x = t, traj.state_at(t)
    best_phi = float(np.sum(G(best_x) ** 2))
    for _ in range(iters):
        x = best_x
        g = G(x)
        dg = G.jacobian(x) @ F(x)
        den = float(dg @ dg)
        if den == 0.0:
            break
        tn = min(max(best_t - float(g @ dg) / den, lo), hi)
        xn = traj.state_at(tn)
        phi = float(np.sum(G(xn) ** 2))
        if phi >= best_phi:
            break
        best_t, best_x, best_phi = tn, xn, phi
    return best_t, best_x, best_phi


def detect_returns(
    field,
    ideal_evals,
    p0,
    delta_max: float,
    tol: float = CROSS_TOL,
    rtol: float = RTOL,
    atol: float = ATOL,
    time_tol: float = TIME_TOL,
    sing_tol: float = SING_TOL,
    samples_per_step: int = 8,
) -> CrossingReport:
    """All times in ``(0, delta_max]`` at which the orbit of ``p0`` is back on X.

    One equation: sign changes on the dense output, refined by Brent root
    finding on re-integrated states.  Several equations: local minima of
    the residual sum of squares, refined by bounded scalar minimization and
    a Gauss-Newton polish; accepted when the minimum is below ``tol**2``.

    Raises
    ------
    NotOnXError
        ``p0`` violates the equations by more than ``tol``.
    SingularStartError
        The field norm at ``p0`` is below ``sing_tol``.
    """
    p0 = np.asarray(p0, dtype=float)
    F = as_field(field, p0.size)
    G = Constraints(ideal_evals, p0.size)
    r0 = G(p0)
    if np.max(np.abs(r0), initial=0.0) >= tol:
        raise NotOnXError(f"start point is not on X (residual {np.max(np.abs(r0)):.3e})")
    if np.linalg.norm(F(p0)) < sing_tol:
        raise SingularStartError(f"start point {p0.tolist()} is a singular point of the field")
    if delta_max <= 0:
        raise ValueError("delta_max must be positive")
    traj = _run(F, p0, delta_max, rtol, atol, hmax=delta_max / 64)
    n = len(traj.times)
    fine = [traj.times[0]]
    for k in range(n - 1):
        fine.extend(np.linspace(traj.times[k], traj.times[k + 1], samples_per_step + 1)[1:])
    fine = np.asarray(fine)
    X = traj(fine)
    vals = np.array([G(x) for x in X])
    t_end = traj.times[-1]
    times, residuals = [], []

    def exact_g(t):
        return G(traj.state_at(t))

    if G.count == 1:
        g = vals[:, 0]
        for j in range(1, len(fine) - 1):
            a, b = fine[j], fine[j + 1]
            if g[j + 1] == 0.0:
                cand = [b]
            elif g[j] * g[j + 1] < 0:
                ga, gb = exact_g(a)[0], exact_g(b)[0]
                if ga * gb > 0:
                    # dense output misled the bracket; scan this step exactly
                    grid = np.linspace(traj.times[max(0, np.searchsorted(traj.times, a) - 1)], min(t_end, b + (b - a)), 17)
                    gg = [exact_g(t)[0] for t in grid]
                    cand = []
                    for u, v, gu, gv in zip(grid[:-1], grid[1:], gg[:-1], gg[1:]):
                        if gu * gv < 0 and u > 0:
                            cand.append(brentq(lambda t: exact_g(t)[0], u, v, xtol=time_tol * 1e-2, rtol=4 * np.finfo(float).eps))
                else:
                    cand = [brentq(lambda t: exact_g(t)[0], a, b, xtol=time_tol * 1e-2, rtol=4 * np.finfo(float).eps)]
            else:
                continue
            for t in cand:
                res = float(np.max(np.abs(exact_g(t))))
                if t > 0 and res < tol and not any(abs(t - s) < 10 * time_tol for s in times):
                    times.append(float(t))
                    residuals.append(res)
    else:
        phi = np.sum(vals**2, axis=1)
        for j in range(1, len(fine)):
            left = phi[j - 1]
            right = phi[j + 1] if j + 1 < len(fine) else math.inf
            if not (phi[j] <= left and phi[j] < right):
                continue
            lo_t, hi_t = fine[j - 1], fine[min(j + 1, len(fine) - 1)]
            opt = minimize_scalar(
                lambda t: float(np.sum(exact_g(t) ** 2)),
                bounds=(lo_t, hi_t),
                method="bounded",
                options={"xatol": 1e-13},
            )
            t, x, val = _gn_polish(G, F, traj, float(opt.x), lo_t, hi_t)
            if t > 10 * time_tol and val < tol**2 and not any(abs(t - s) < 10 * time_tol for s in times):
                times.append(float(t))
                residuals.append(float(np.max(np.abs(G(x)))))
    order = np.argsort(times)
    times = [times[i] for i in order]
    residuals = [residuals[i] for i in order]
    return CrossingReport(p0, times, residuals, times[0] if times else None, float(delta_max), tol)


# ---------------------------------------------------------------- delta


@dataclass
class DeltaReport:
    delta_est: float | None
    worst: CrossingReport | None
    samples: list  # (point, min_return or None)
    singular: int = 0
    on_divisor: int = 0
    off_X: int = 0

    def __iter__(self):
        yield self.delta_est
        yield self.worst


def _grid_points(box, grid):
    axes = []
    if isinstance(grid, int):
        grid = [grid] * len(box)
    for (lo, hi), n in zip(box, grid):
        if n < 1:
            raise ValueError("grid must be >= 1 per axis")
        lo, hi = float(lo), float(hi)
        axes.append(np.array([(lo + hi) / 2]) if n == 1 else np.linspace(lo, hi, n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def estimate_flowbox_delta(
    field,
    ideal_evals,
    box,
    grid,
    delta_max: float,
    tol: float = CROSS_TOL,
    divisor_evals=(),
    keep: Callable | None = None,
    both_directions: bool = True,
    jobs: int = 1,
    rtol: float = RTOL,
    atol: float = ATOL,
    sing_tol: float = SING_TOL,
    reversed_field=None,
) -> DeltaReport:
    """Smallest return time over grid samples of ``K``, projected to X.

    Samples that are singular, on the divisor, rejected by ``keep`` or fail
    to project are discarded.  With ``both_directions`` the reversed field
    is also scanned, since the definition bounds ``|t|``.

    Raises
    ------
    ValueError
        No grid node lands on X.
    """
    dim = len(box)
    F = as_field(field, dim)
    G = Constraints(ideal_evals, dim)
    D = Constraints(list(divisor_evals), dim) if len(divisor_evals) else None
    if both_directions:
        if reversed_field is not None:
            R = as_field(reversed_field, dim)
        elif isinstance(field, AnalyticField):
            R = as_field(field.reversed(), dim)
        elif isinstance(field, VectorField):
            R = as_field(-field, dim)
        else:
            R = as_field(lambda x: -np.asarray(F(x)), dim)
    pts, seen = [], set()
    off = 0
    for node in _grid_points(box, grid):
        x = G.project(node, tol * 1e-2)
        if x is None:
            off += 1
            continue
        key = tuple(np.round(x, 10))
        if key in seen:
            continue
        seen.add(key)
        pts.append(x)
    if not pts:
        raise ValueError("no grid node could be projected onto X")
    sing = div = 0
    todo = []
    for x in pts:
        if keep is not None and not keep(x):
            continue
        if D is not None and np.min(np.abs(D(x))) < tol:
            div += 1
            continue
        if np.linalg.norm(F(x)) < sing_tol:
            sing += 1
            continue
        todo.append(x)

    def work(x):
        rep = detect_returns(F, G, x, delta_max, tol, rtol, atol, sing_tol=sing_tol)
        best = rep
        if both_directions:
            back = detect_returns(R, G, x, delta_max, tol, rtol, atol, sing_tol=sing_tol)
            if back.min_return is not None and (rep.min_return is None or back.min_return < rep.min_return):
                best = back
        return x, best

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(work, todo))
    else:
        results = [work(x) for x in todo]
    delta, worst = None, None
    samples = []
    for x, rep in results:
        samples.append((x, rep.min_return))
        if rep.min_return is not None and (delta is None or rep.min_return < delta):
            delta, worst = rep.min_return, rep
    return DeltaReport(delta, worst, samples, sing, div, off)


# ---------------------------------------------------------------- SR metric


class _Generators:
    """Batched evaluation of a generator list; slot ``g*dim + i``."""

    def __init__(self, generators, dim: int):
        self.dim = dim
        self.ngen = len(generators)
        packs = []
        for g in generators:
            if isinstance(g, VectorField):
                packs.append(PackedPoly.from_polynomials(g.components, dim))
            elif isinstance(g, AnalyticField) and g.packed is not None:
                packs.append(g.packed)
            else:
                packs = None
                break
        self.packed = PackedPoly.stack(packs) if packs else None
        self._fields = [as_field(g, dim) for g in generators]

    def matrix(self, x) -> np.ndarray:
        return np.array([f(x) for f in self._fields])

    def _eval_batch(self, X):
        return np.concatenate([f.batch(X) for f in self._fields], axis=1)

    def shoot(self, p0, U, dt, substeps, keep_path=False):
        if self.packed is not None:
            pk = self.packed
            return kernels.shoot_batch(pk.exps, pk.coef, pk.comp, self.ngen, p0, U, dt, substeps, keep_path)
        return kernels.shoot_batch_callable(self._eval_batch, self.ngen, p0, U, dt, substeps, keep_path)


def _endpoint_jac(gens: _Generators, p, u, shape, dt, substeps, eps=1e-7):
    n = u.size
    U = np.repeat(u[None, :], n + 1, axis=0)
    U[1:] += eps * np.eye(n)
    X, _ = gens.shoot(p, U.reshape((n + 1,) + shape), dt, substeps)
    return X[0], (X[1:] - X[0]).T / eps


def sr_distance(
    generators,
    p,
    q,
    horizon: float = 1.0,
    n_steps: int = 8,
    budget: int = 20000,
    tol: float = 1e-4,
    seed: int = 0,
    substeps: int = 8,
    starts: int = 6,
) -> float:
    """Upper-bound sub-Riemannian distance with piecewise-constant controls.

    Controls ``u_k`` are held on ``n_steps`` equal intervals of ``[0, horizon]``
    and the curve solves ``x' = sum_i u_i V_i(x)``.  Each multistart first
    reaches ``q`` with Levenberg-Marquardt, then minimizes control energy
    on the reach manifold with projected Newton steps; the reported cost is
    ``sum_k |u_k| dt``.  ``budget`` caps batched shooting rows.  Returns
    ``inf`` if no start reaches ``q`` within ``tol``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    dim = p.size
    gens = _Generators(list(generators), dim)
    m = gens.ngen
    shape = (n_steps, m)
    dt = horizon / n_steps
    rng = np.random.default_rng(seed)
    used = 0
    best = math.inf
    if np.linalg.norm(q - p) < tol:
        return 0.0

    def length(u):
        return float(np.sum(np.linalg.norm(u.reshape(shape), axis=1)) * dt)

    Vp = gens.matrix(p)  # (m, dim)
    u_line, *_ = np.linalg.lstsq(Vp.T, (q - p) / horizon, rcond=None)
    scale = max(np.linalg.norm(q - p) / horizon, 1e-3)
    inits = [np.tile(u_line, n_steps)]
    for _ in range(starts - 1):
        inits.append(rng.normal(scale=scale, size=n_steps * m))

    for u in inits:
        if used >= budget:
            break
        u = u.astype(float)
        lam = 1e-3
        reached = False
        # reach phase
        for _ in range(200):
            if used >= budget:
                break
            x, J = _endpoint_jac(gens, p, u, shape, dt, substeps)
            used += u.size + 1
            r = x - q
            nr = np.linalg.norm(r)
            if nr < tol * 1e-3:
                reached = True
                break
            H = J.T @ J
            g = J.T @ r
            improved = False
            for _ in range(12):
                step = np.linalg.solve(H + lam * (np.diag(np.diag(H)) + 1e-12 * np.eye(u.size)), -g)
                xn, _ = gens.shoot(p, (u + step).reshape((1,) + shape), dt, substeps)
                used += 1
                if np.linalg.norm(xn[0] - q) < nr:
                    u = u + step
                    lam = max(lam / 3, 1e-12)
                    improved = True
                    break
                lam *= 4
            if not improved:
                reached = nr < tol
                break
        if not reached:
            continue
        # energy phase on the reach manifold
        def correct(v, iters=6):
            # pull v back onto {endpoint = q} with minimum-norm Gauss-Newton steps
            nonlocal used
            for _ in range(iters):
                xv, Jv = _endpoint_jac(gens, p, v, shape, dt, substeps)
                used += v.size + 1
                rv = xv - q
                if np.linalg.norm(rv) < tol * 1e-3:
                    return v, True
                dv, *_ = np.linalg.lstsq(Jv, -rv, rcond=None)
                v = v + dv
            xv, _ = gens.shoot(p, v.reshape((1,) + shape), dt, substeps)
            used += 1
            return v, bool(np.linalg.norm(xv[0] - q) < tol)

        for _ in range(60):
            if used >= budget:
                break
            x, J = _endpoint_jac(gens, p, u, shape, dt, substeps)
            used += u.size + 1
            r = x - q
            # minimum-norm solution of J u' = J u - r: the projected energy step
            unew, *_ = np.linalg.lstsq(J, J @ u - r, rcond=None)
            delta = unew - u
            e_old = float(u @ u)
            accepted = False
            for a in (1.0, 0.5, 0.25, 0.1, 0.03):
                cand, ok = correct(u + a * delta)
                if ok and float(cand @ cand) < e_old * (1 - 1e-12):
                    u = cand
                    accepted = True
                    break
            if not accepted or np.linalg.norm(a * delta) < 1e-10 * (1 + np.linalg.norm(u)):
                break
        x, _ = gens.shoot(p, u.reshape((1,) + shape), dt, substeps)
        used += 1
        if np.linalg.norm(x[0] - q) < tol:
            best = min(best, length(u))
    return best


@dataclass
class SRQuery:
    generators: list
    q: np.ndarray
    eta: float
    n_steps: int = 4
    budget: int = 200

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        self.q = np.asarray(self.q, dtype=float)


@dataclass
class BallProbeReport:
    k_q: int
    intersects_X_off_center: bool
    hits: list
    samples: int


def _rk4_sub(gens: _Generators, x, u, h):
    """One RK4 step of length ``h`` with control ``u`` from ``x``."""
    U = np.asarray(u, dtype=float).reshape(1, 1, -1)
    X, _ = gens.shoot(x, U, h, 1)
    return X[0]


def sr_ball_probe(query: SRQuery, ideal_evals, tol: float = CROSS_TOL, seed: int = 0, off_center: float = 1e-6, substeps: int = 16) -> BallProbeReport:
    """Look for points of X inside the SR ball of radius eta other than q.

    Half of the samples are constant-direction controls using the full
    cost, the rest random piecewise-constant controls rescaled to a cost
    below ``eta``.  Paths are scanned node by node; candidate hits are
    refined with local RK4 sub-steps.
    """
    q = query.q
    dim = q.size
    gens = _Generators(list(query.generators), dim)
    G = Constraints(ideal_evals, dim)
    if np.max(np.abs(G(q)), initial=0.0) >= tol:
        raise NotOnXError("base point is not on X")
    s = np.linalg.svd(gens.matrix(q), compute_uv=False)
    k_q = int(np.sum(s > tol))
    rng = np.random.default_rng(seed)
    n, m = query.n_steps, gens.ngen
    dt = 1.0 / n
    hs = dt / substeps
    B = query.budget
    U = np.empty((B, n, m))
    nconst = B // 2
    for b in range(B):
        if b < nconst:
            d = rng.normal(size=m)
            d /= np.linalg.norm(d)
            U[b] = d * query.eta * (1 - 1e-9)
        else:
            raw = rng.normal(size=(n, m))
            cost = np.sum(np.linalg.norm(raw, axis=1)) * dt
            U[b] = raw * (query.eta * rng.uniform(0.5, 1.0) / cost) * (1 - 1e-9)
    _, path = gens.shoot(q, U, dt, substeps, keep_path=True)
    hits = []
    for b in range(B):
        P = path[b]
        vals = np.array([G(x) for x in P])
        for j in range(1, len(P) - 1):
            if G.count == 1:
                if not (vals[j, 0] == 0.0 or vals[j, 0] * vals[j + 1, 0] < 0):
                    continue
            else:
                phi = np.sum(vals**2, axis=1)
                if not (phi[j] <= phi[j - 1] and phi[j] <= phi[j + 1]):
                    continue
            if G.count == 1:
                u, x0 = U[b, j // substeps], P[j]

                def resid(f):
                    return G(_rk4_sub(gens, x0, u, f * hs))[0]

                r0, r1 = resid(0.0), resid(1.0)
                if r0 == 0.0:
                    frac = 0.0
                elif r0 * r1 < 0:
                    frac = brentq(resid, 0.0, 1.0, xtol=1e-14)
                else:
                    continue
                x = _rk4_sub(gens, x0, u, frac * hs)
            else:
                # the minimum may sit in either sub-step adjacent to node j
                cands = []
                for i0 in (j - 1, j):
                    u, x0 = U[b, i0 // substeps], P[i0]
                    opt = minimize_scalar(
                        lambda f: float(np.sum(G(_rk4_sub(gens, x0, u, f * hs)) ** 2)),
                        bounds=(0.0, 1.0),
                        method="bounded",
                        options={"xatol": 1e-12},
                    )
                    cands.append((opt.fun, _rk4_sub(gens, x0, u, opt.x * hs)))
                x = min(cands, key=lambda c: c[0])[1]
            if np.max(np.abs(G(x))) < tol and np.linalg.norm(x - q) > off_center:
                hits.append(x)
                break
    return BallProbeReport(k_q, bool(hits), hits, B)
