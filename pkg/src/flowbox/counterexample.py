"""The four-dimensional quasi-transverse system without a flow-box bound.

Field ``y^2 d/dw + x d/dy - y d/dx`` on ``(x, y, z, w)`` with ``X`` cut out
by ``z = f(x, y)``, ``w = g(x, y)``, where

    f = y^2 cos(h(x^2+y^2)) - x y sin(h(x^2+y^2))
    g = x y (x^2+y^2)^2 / 2

and ``h`` is the branch from :mod:`flowbox.hbranch`.  Also the
five-dimensional variant with an extra commuting generator ``d/dv``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import hbranch
from .analytic import AnalyticField, AnalyticMap, h as h_fn
from .blowup import polar_blowup
from .dynamics import detect_returns, integrate
from .geometry import (
    Distribution,
    FoliatedSystem,
    VectorField,
    is_analytically_qt,
    numeric_qt,
)
from .hbranch import HConvergenceError, HDomainError, HSolution, U0, solve_h
from .polyring import Ideal
from .splitting import extract_connection

__all__ = [
    "U0",
    "V0",
    "HSolution",
    "HConvergenceError",
    "HDomainError",
    "solve_h",
    "CounterexampleSystem",
    "BlownUpSystem",
    "Remark5D",
    "build_counterexample_4d",
    "blown_up_system",
    "tangency_residuals",
    "verify_claim1",
    "verify_claim2",
    "orbit_closed_form",
    "build_remark_5d",
    "lemma_table",
]

V0 = math.sqrt(2.0) / 2.0
VARS4 = ("x", "y", "z", "w")
FIELD4 = ["-y", "x", "0", "y^2"]
SHADOW_TEXT = "w - 1/2*x^5*y - x^3*y^3 - 1/2*x*y^5"  # w - g expanded


def _f_expr(x, y):
    s = x**2 + y**2
    return y**2 * sp.cos(h_fn(s)) - x * y * sp.sin(h_fn(s))


def _g_expr(x, y):
    return sp.Rational(1, 2) * x * y * (x**2 + y**2) ** 2


@dataclass
class CounterexampleSystem:
    variables: tuple
    field: AnalyticField
    X: AnalyticMap  # (z - f, w - g)
    shadow: FoliatedSystem  # polynomial part: I = (w - g)
    f: sp.Expr
    g: sp.Expr


def build_counterexample_4d() -> CounterexampleSystem:
    fld = AnalyticField(VARS4, FIELD4)
    x, y, z, w = fld.symbols
    f, g = _f_expr(x, y), _g_expr(x, y)
    X = AnalyticMap(VARS4, [z - f, w - g])
    theta = Distribution([VectorField.parse(FIELD4, VARS4)])
    shadow = FoliatedSystem(VARS4, theta, Ideal.parse([SHADOW_TEXT], VARS4), name="counterexample4d-shadow")
    return CounterexampleSystem(VARS4, fld, X, shadow, f, g)


@dataclass
class BlownUpSystem:
    variables: tuple
    field: AnalyticField  # r^2 sin^2(alpha) d/dw + d/dalpha
    X: AnalyticMap  # (z - f~, w - g~) in (r, alpha, z, w)


def blown_up_system(system: CounterexampleSystem | None = None) -> BlownUpSystem:
    """Polar blow-up of the counterexample along ``x = y = 0``."""
    system = system or build_counterexample_4d()
    fld = polar_blowup(system.field, ("x", "y"), ("r", "alpha"))
    r, a, z, w = fld.symbols
    x, y = system.field.symbols[:2]
    sub = {x: r * sp.cos(a), y: r * sp.sin(a)}
    comps = []
    for e in system.X.exprs:
        e = e.subs(sub, simultaneous=True)
        # h(r^2 cos^2 + r^2 sin^2) -> h(r^2)
        e = e.replace(h_fn, lambda arg: h_fn(sp.trigsimp(sp.factor(arg))))
        comps.append(sp.trigsimp(e))
    return BlownUpSystem(fld.variables, fld, AnalyticMap(fld.variables, comps))


def tangency_residuals(x, y):
    """``T1 = d(z - f)`` and ``T2 = 2 d(w - g)`` along the field, vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x * x + y * y
    hv = np.asarray(hbranch.h_values(s))
    T1 = -2 * x * y * np.cos(hv) + (x * x - y * y) * np.sin(hv)
    T2 = 2 * y * y - (x * x - y * y) * s**2
    return T1, T2


def _T2_branches(r):
    """Angles in [0, 2 pi) with ``T2 = 0`` on the circle of radius ``r``.

    ``T2 / r^2 = 2 sin^2(a) - r^4 cos(2a)`` vanishes where
    ``sin^2(a) = r^4 / (2 (1 + r^4))``.
    """
    a = math.asin(math.sqrt(r**4 / (2 * (1 + r**4))))
    return [a, math.pi - a, math.pi + a, 2 * math.pi - a]


def _v_branch(xs, sign=1.0):
    """Newton continuation of ``T2(x, y) = 0`` for ``y ~ sign * x^3 / sqrt(2)``.

    Returns ``V(x) = y / x^3`` along ``xs`` (processed from largest to smallest).
    """
    order = np.argsort(-np.abs(xs))
    out = np.empty(len(xs))
    y = prev = None
    for i in order:
        x = float(xs[i])
        if y is None:
            y = sign * x**3 * V0
        else:
            y = y * (x / prev) ** 3  # scale the previous solution
        for _ in range(60):
            s = x * x + y * y
            F = 2 * y * y - (x * x - y * y) * s * s
            dF = 4 * y + 2 * y * s * s - (x * x - y * y) * 4 * s * y
            step = F / dF
            y -= step
            if abs(step) <= 1e-16 * abs(y):
                break
        out[i] = y / x**3
        prev = x
    return out


@dataclass
class Claim1Report:
    grid_shape: tuple
    grid_min_scaled: float
    circle_r: float
    circle_min: float
    curve_min_scaled: float
    common_zero_off_origin: bool
    V0_estimate: float
    V0_error: float
    branch_coefficients: tuple  # (U0 + 2 V0, U0 - 2 V0)
    axis_check: bool

    @property
    def verdict(self) -> bool:
        return (not self.common_zero_off_origin) and self.axis_check and self.circle_min > 1e-6


def verify_claim1(n_r: int = 200, n_alpha: int = 200, r_max: float = 0.5, circle_r: float = 0.25, tol: float = 1e-10) -> Claim1Report:
    """Sampled and curve-wise search for tangencies of the field with X.

    On the polar grid the residuals are scaled as ``T1 / r^4`` and
    ``T2 / r^6``, the orders at which they vanish near the origin.  Along
    each exact branch of ``T2 = 0`` the scaled ``|T1|`` is minimized over
    the radii of the grid; a common zero off the origin would drive it
    below ``tol``.  ``V(0)`` comes from Newton continuation of the branch
    ``y = x^3 V(x)`` and Richardson extrapolation in ``x^4``.
    """
    if r_max > 0.5:
        raise ValueError("r_max must be <= 0.5")
    rs = r_max * np.arange(1, n_r + 1) / n_r
    al = 2 * np.pi * np.arange(n_alpha) / n_alpha
    R, A = np.meshgrid(rs, al, indexing="ij")
    X, Y = R * np.cos(A), R * np.sin(A)
    T1, T2 = tangency_residuals(X, Y)
    scaled = np.maximum(np.abs(T1) / R**4, np.abs(T2) / R**6)
    grid_min = float(scaled.min())
    k = int(np.argmin(np.abs(rs - circle_r)))
    circle_min = float(np.max(np.stack([np.abs(T1[k]), np.abs(T2[k])]), axis=0).min())
    curve_min = math.inf
    for r in rs:
        for a in _T2_branches(float(r)):
            t1, _ = tangency_residuals(r * math.cos(a), r * math.sin(a))
            curve_min = min(curve_min, abs(float(t1)) / r**4)
    # V(0): continuation from x = 0.5 down to 0.02, extrapolated in u = x^4
    xs = np.array([0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.04, 0.02])
    Vs = _v_branch(xs)
    u = xs**4
    small = np.argsort(u)[:3]
    coeffs = np.polyfit(u[small], Vs[small], 2)
    V0_est = float(np.polyval(coeffs, 0.0))
    axis_x = rs[::20]
    _, t2_axis = tangency_residuals(axis_x, np.zeros_like(axis_x))
    axis_ok = bool(np.allclose(t2_axis, -axis_x**6, rtol=1e-12, atol=0) and np.all(t2_axis != 0))
    return Claim1Report(
        (n_r, n_alpha),
        grid_min,
        float(rs[k]),
        circle_min,
        curve_min,
        curve_min < tol,
        V0_est,
        abs(V0_est - V0),
        (U0 + 2 * V0_est, U0 - 2 * V0_est),
        axis_ok,
    )


def orbit_closed_form(r0: float, t):
    """``(r0, t, 0, r0^2/4 (2t - sin 2t))``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.full_like(t, r0), t, np.zeros_like(t), r0**2 / 4 * (2 * t - np.sin(2 * t))], axis=-1)


@dataclass
class Claim2Report:
    r0: float
    t_return: float
    z_residual: float
    w_residual: float
    orbit_error: float
    detected_return: float | None
    start_residual: float

    @property
    def membership_residual(self) -> float:
        return max(self.z_residual, self.w_residual)


def verify_claim2(r0: float, blown: BlownUpSystem | None = None, rtol: float = 1e-12, atol: float = 1e-14, detect: bool = True) -> Claim2Report:
    """Integrate the blown-up orbit from ``(r0, 0, 0, 0)`` to ``t = h(r0^2)``."""
    if not 0 < r0 <= 0.5:
        raise ValueError("r0 must lie in (0, 0.5]")
    blown = blown or blown_up_system()
    t_ret = solve_h(r0 * r0).h
    p0 = np.array([r0, 0.0, 0.0, 0.0])
    traj = integrate(blown.field, p0, t_ret, rtol=rtol, atol=atol)
    exact = orbit_closed_form(r0, traj.times)
    orbit_err = float(np.max(np.abs(traj.states - exact)))
    end = traj.states[-1]
    res = np.abs(blown.X(end))
    start_res = float(np.max(np.abs(blown.X(p0))))
    found = None
    if detect:
        rep = detect_returns(blown.field, blown.X, p0, 1.5 * t_ret, tol=1e-7, rtol=rtol, atol=atol)
        found = rep.min_return
    return Claim2Report(r0, t_ret, float(res[0]), float(res[1]), orbit_err, found, start_res)


@dataclass
class Remark5D:
    variables: tuple
    theta: Distribution
    X: AnalyticMap  # (z - f, w - g, v)
    shadow: FoliatedSystem  # I = (w - g, v)
    tags: tuple = ("satisfies the one-step condition", "fails the flow-box bound after leaf reduction")
    unit: sp.Expr | None = None
    aqt_sample_residual: float = field(default=math.nan)


VARS5 = ("x", "y", "z", "w", "v")


def _derive(gens_exprs, symbols, exprs):
    return [sp.expand(sum(c * sp.diff(e, s) for c, s in zip(comps, symbols))) for comps in gens_exprs for e in exprs]


def build_remark_5d(samples: int = 50, seed: int = 0) -> Remark5D:
    """The five-dimensional variant and its one-step condition.

    The derivative ideal contains the unit ``d/dv (v) = 1``, so every
    element of the second derivative ideal is a multiple of it; this is
    checked symbolically and the certificates are sampled numerically.
    """
    gens = [VectorField.parse(["-y", "x", "0", "y^2", "0"], VARS5), VectorField.coordinate(VARS5, "v")]
    theta = Distribution(gens)
    syms = sp.symbols(VARS5, real=True)
    x, y, z, w, v = syms
    Xe = [z - _f_expr(x, y), w - _g_expr(x, y), v]
    X = AnalyticMap(VARS5, Xe)
    gexprs = [[sp.sympify(str(c).replace("^", "**"), locals=dict(zip(VARS5, syms))) for c in g.components] for g in gens]
    t1 = _derive(gexprs, syms, Xe)
    t2 = _derive(gexprs, syms, t1)
    units = [e for e in t1 if e.is_number and e != 0]
    if not units:
        raise RuntimeError("expected a unit in the derivative ideal")
    unit = units[0]
    # certificate: g = (g / unit) * unit, checked at sample points near the origin
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.3, 0.3, size=(samples, 5))
    cert = AnalyticMap(VARS5, [e - (e / unit) * unit for e in t2])
    worst = float(np.max(np.abs(cert(pts)))) if t2 else 0.0
    shadow = FoliatedSystem(
        VARS5,
        theta,
        Ideal.parse([SHADOW_TEXT, "v"], VARS5),
        name="remark5d-shadow",
    )
    return Remark5D(VARS5, theta, X, shadow, unit=unit, aqt_sample_residual=worst)


def remark5d_shadow_aqt(bundle: Remark5D | None = None) -> bool:
    bundle = bundle or build_remark_5d()
    return is_analytically_qt(bundle.shadow)


def leaf_reduce_remark5d(bundle: Remark5D | None = None):
    """Reduce along ``Y = d/dv`` and restrict to the leaf ``v = 0``.

    Returns ``(field_exprs, X_exprs)`` in ``(x, y, z, w)``.
    """
    bundle = bundle or build_remark_5d()
    Y = bundle.theta[1]
    W = [bundle.theta[0]]
    A = extract_connection(Y, W)
    if any(not a.is_zero for row in A for a in row):
        raise RuntimeError("expected a commuting complement")
    # A = 0, so Z = W; drop the v coordinate and the generator v of I
    Z = W[0]
    vs = sp.symbols(VARS5, real=True)
    comps = [sp.sympify(str(c).replace("^", "**"), locals=dict(zip(VARS5, vs))) for c in Z.components[:4]]
    Xr = [e.subs(vs[4], 0) for e in bundle.X.exprs if e != vs[4]]
    return comps, Xr


def remark5d_generic_qt(bundle: Remark5D | None = None, point_xy=(0.3, 0.1), tol: float = 1e-9):
    """Floating-point GQT at the point of X above ``(x, y)``."""
    bundle = bundle or build_remark_5d()
    x, y = point_xy
    s = x * x + y * y
    hv = float(hbranch.h_values(s))
    f = y * y * math.cos(hv) - x * y * math.sin(hv)
    g = 0.5 * x * y * s * s
    p = np.array([x, y, f, g, 0.0])
    L = bundle.theta.matrix_at_float(p)
    J = bundle.X.jacobian_at(p)
    return numeric_qt(p, L, J, tol)


def lemma_table(s_values=(0.0, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.49, 0.7)):
    """Rows ``(s, h, U, residual)`` plus a Richardson estimate of ``U(0)``."""
    rows = [solve_h(s) for s in s_values]
    # U(s) = U0 + c s^2 + O(s^4): combine s and s/2; smaller s loses to roundoff in h/s
    s = 4e-3
    Ua, Ub = solve_h(s).U, solve_h(s / 2).U
    U0_rich = (4 * Ub - Ua) / 3
    return rows, U0_rich
