"""Chart-wise blow-ups at coordinate centers, plus the real polar blow-up.

In the chart of ``x_c`` the substitution is ``x_i -> x_c * x_i`` for the
other center variables; variable names are kept.  Fields pull back as
``v_i' = (v_i - x_i v_c) / x_c`` on those variables, ideals by the weak
transform of order one, divisors by pullback plus the exceptional ``x_c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .analytic import AnalyticField, DomainError
from .geometry import (
    Distribution,
    FoliatedSystem,
    VectorField,
    derivative_ideal,
)
from .polyring import Ideal, Polynomial, ideal_contains

__all__ = [
    "BlowupSpec",
    "TransformedSystem",
    "BlowupError",
    "NonInvariantCenterError",
    "OrderOneError",
    "NotSNCError",
    "NonPolynomialPullbackError",
    "blowup_chart",
    "pullback",
    "verify_transform_identity",
    "weak_transform_identity",
    "polar_blowup",
]


class BlowupError(ValueError):
    pass


class NonInvariantCenterError(BlowupError):
    pass


class OrderOneError(BlowupError):
    pass


class NotSNCError(BlowupError):
    pass


class NonPolynomialPullbackError(BlowupError):
    """Should be unreachable once the center is invariant."""


@dataclass(frozen=True)
class BlowupSpec:
    center_vars: tuple
    chart_var: str

    def __post_init__(self):
        object.__setattr__(self, "center_vars", tuple(self.center_vars))
        if len(set(self.center_vars)) < 2:
            raise ValueError("a blow-up center needs at least two coordinates")
        if self.chart_var not in self.center_vars:
            raise ValueError(f"chart variable {self.chart_var} is not a center variable")


@dataclass
class TransformedSystem:
    system: FoliatedSystem
    exceptional: Polynomial
    log: dict = field(default_factory=dict)
    spec: BlowupSpec | None = None


def _substitution(variables, spec: BlowupSpec) -> dict:
    xc = Polynomial.variable(variables, spec.chart_var)
    return {
        v: xc * Polynomial.variable(variables, v)
        for v in spec.center_vars
        if v != spec.chart_var
    }


def pullback(f: Polynomial, spec: BlowupSpec) -> Polynomial:
    """Total transform ``sigma^* f`` in the chart."""
    return f.substitute(_substitution(f.variables, spec))


def _pullback_field(v: VectorField, spec: BlowupSpec) -> VectorField:
    sub = _substitution(v.variables, spec)
    c = spec.chart_var
    ci = v.variables.index(c)
    pulled = [comp.substitute(sub) for comp in v.components]
    out = []
    for name, comp in zip(v.variables, pulled):
        if name in sub:
            num = comp - Polynomial.variable(v.variables, name) * pulled[ci]
            q = num.divide_by_variable(c)
            if q is None:
                raise NonPolynomialPullbackError(
                    f"pulled-back component d/d{name} of {v} is not divisible by {c}"
                )
            out.append(q)
        else:
            out.append(comp)
    return VectorField(out)


def _divisor_components(e: Polynomial) -> list[Polynomial]:
    """Split a coordinate monomial into its variables; reject anything else."""
    if len(e.terms) != 1:
        raise NotSNCError(f"divisor component {e} is not a coordinate monomial")
    (exp, _), = e.terms.items()
    if sum(exp) == 0:
        raise NotSNCError(f"divisor component {e} is a unit")
    return [Polynomial.variable(e.variables, e.variables[i]) for i, k in enumerate(exp) if k]


def blowup_chart(system: FoliatedSystem, spec: BlowupSpec) -> TransformedSystem:
    """Blow up ``system`` along ``V(center_vars)`` and return one chart.

    Raises
    ------
    NonInvariantCenterError
        A generator derivative of a center coordinate leaves the center ideal.
    OrderOneError
        A pulled-back ideal generator is not divisible by the chart variable.
    NotSNCError
        A divisor component is not a coordinate variable.
    """
    V = system.variables
    for v in spec.center_vars:
        if v not in V:
            raise BlowupError(f"unknown center variable {v}")
    center = Ideal([Polynomial.variable(V, v) for v in spec.center_vars], V)
    for i, g in enumerate(system.theta):
        for x in center.generators:
            d = g.apply(x)
            if not center.contains(d):
                raise NonInvariantCenterError(
                    f"center not invariant: generator {i} maps {x} to {d}, outside {center}"
                )
    for e in system.divisor:
        _divisor_components(e)
    c = spec.chart_var
    xc = Polynomial.variable(V, c)
    theta = Distribution([_pullback_field(g, spec) for g in system.theta])
    weak = []
    for g in system.ideal.generators:
        q = pullback(g, spec).divide_by_variable(c)
        if q is None:
            raise OrderOneError(
                f"ideal generator {g} does not vanish to order one on the center {tuple(spec.center_vars)}"
            )
        weak.append(q)
    divisor: list[Polynomial] = []
    for e in list(system.divisor) + [xc]:
        for comp in _divisor_components(pullback(e, spec)):
            if comp not in divisor:
                divisor.append(comp)
    log = {v: f"{c}*{v}" for v in spec.center_vars if v != c}
    new = FoliatedSystem(
        V,
        theta,
        Ideal(weak, V),
        tuple(divisor),
        name=f"{system.name}:blowup({','.join(spec.center_vars)};{c})",
    )
    return TransformedSystem(new, xc, log, spec)


def _pulled_ideal(I: Ideal, spec: BlowupSpec) -> Ideal:
    return Ideal([pullback(g, spec) for g in I.generators], I.variables)


def weak_transform_identity(system: FoliatedSystem, spec: BlowupSpec, transformed: TransformedSystem | None = None) -> bool:
    """``I_F * I~ == sigma^* I`` as a two-sided inclusion."""
    return verify_transform_identity(system, spec, 0, transformed)


def verify_transform_identity(system: FoliatedSystem, spec: BlowupSpec, nu: int, transformed: TransformedSystem | None = None) -> bool:
    """Check ``I_F * sum_{i<=nu} theta~^i[I~] == sigma^*(sum_{i<=nu} theta^i[I])``."""
    if nu < 0:
        raise ValueError("nu must be non-negative")
    t = transformed or blowup_chart(system, spec)
    V = system.variables
    lower, upper = [system.ideal], [t.system.ideal]
    for _ in range(nu):
        lower.append(derivative_ideal(system.theta, lower[-1]))
        upper.append(derivative_ideal(t.system.theta, upper[-1]))
    rhs = _pulled_ideal(Ideal([g for J in lower for g in J.generators], V), spec)
    up = Ideal([g for J in upper for g in J.generators], V)
    lhs = Ideal([t.exceptional * g for g in up.generators], V)
    return ideal_contains(lhs, rhs) and ideal_contains(rhs, lhs)


def polar_blowup(field_: AnalyticField, vars: tuple = ("x", "y"), names: tuple = ("r", "alpha")) -> AnalyticField:
    """Pull a field back through ``x = r cos(alpha)``, ``y = r sin(alpha)``.

    The angular component carries a ``1/r``; when the numerator vanishes
    identically at ``r = 0`` the factor is cancelled exactly, otherwise the
    returned field raises :class:`DomainError` for ``r <= 0``.
    """
    xn, yn = vars
    V = list(field_.variables)
    if xn not in V or yn not in V:
        raise ValueError(f"{vars} are not variables of the field")
    for nm in names:
        if nm in V and nm not in vars:
            raise ValueError(f"name {nm} clashes with an existing variable")
    ix, iy = V.index(xn), V.index(yn)
    x, y = field_.symbols[ix], field_.symbols[iy]
    r, a = sp.Symbol(names[0], real=True), sp.Symbol(names[1], real=True)
    sub = {x: r * sp.cos(a), y: r * sp.sin(a)}
    comps = [sp.expand(e.subs(sub, simultaneous=True)) for e in field_.exprs]
    Fx, Fy = comps[ix], comps[iy]
    rdot = sp.trigsimp(sp.expand(sp.cos(a) * Fx + sp.sin(a) * Fy))
    num = sp.expand(sp.cos(a) * Fy - sp.sin(a) * Fx)
    removable = sp.trigsimp(num.subs(r, 0)) == 0
    if removable:
        adot = sp.trigsimp(sp.expand(num / r))
    else:
        adot = sp.trigsimp(num) / r
    out = []
    for i, e in enumerate(comps):
        if i == ix:
            out.append(rdot)
        elif i == iy:
            out.append(adot)
        else:
            out.append(sp.trigsimp(e))
    newV = list(V)
    newV[ix], newV[iy] = names

    guard = None
    if not removable:
        def guard(p, _i=ix):
            rv = p[..., _i]
            if (rv <= 0).any():
                raise DomainError(f"{names[0]} <= 0 is outside the chart of the polar blow-up")

    return AnalyticField(newV, out, None, guard)
