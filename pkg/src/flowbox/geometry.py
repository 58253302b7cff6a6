"""Foliated systems: derivative ideals, invariance and quasi-transversality.

A foliated system bundles ambient variables, a distribution given by
polynomial vector-field generators, an ideal ``I`` cutting out ``X`` and a
divisor ``E`` given by hypersurface equations.  All symbolic checks are
exact; the regional scan is sampled in floating point.
"""
from __future__ import annotations

import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _linalg
from .polyring import Ideal, Polynomial, ideal_contains, ideal_sum, parse_polynomial

__all__ = [
    "VectorField",
    "Distribution",
    "FoliatedSystem",
    "PointQT",
    "ScanReport",
    "AQTReport",
    "InvolutivityReport",
    "DivisorTangencyError",
    "PointNotOnXError",
    "PointOnDivisorError",
    "PreconditionError",
    "lie_bracket",
    "is_involutive",
    "involutivity_report",
    "derivative_ideal",
    "iterated_derivative_ideal",
    "fitting_order",
    "is_invariant_ideal",
    "geometric_qt_at",
    "numeric_qt",
    "geometric_qt_scan",
    "is_analytically_qt",
    "aqt_report",
    "tangency_locus",
    "regular_curve_aqt_check",
]


class DivisorTangencyError(ValueError):
    """A distribution generator is not tangent to a divisor component."""


class PointNotOnXError(ValueError):
    pass


class PointOnDivisorError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class VectorField:
    """Polynomial vector field; ``components[i]`` is the coefficient of d/dx_i."""

    def __init__(self, components: Sequence[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        variables = comps[0].variables
        if len(comps) != len(variables):
            raise ValueError(f"{len(comps)} components for {len(variables)} variables")
        for c in comps:
            if c.variables != variables:
                raise ValueError("components live in different rings")
        self.components = comps
        self.variables = variables

    @classmethod
    def parse(cls, texts: Sequence[str], variables: Sequence[str]) -> "VectorField":
        return cls([parse_polynomial(t, variables) for t in texts])

    @classmethod
    def coordinate(cls, variables, name: str) -> "VectorField":
        """The constant field d/d(name)."""
        variables = tuple(variables)
        return cls([Polynomial.constant(variables, int(v == name)) for v in variables])

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    def degree(self) -> int:
        return max((c.total_degree() for c in self.components if not c.is_zero), default=0)

    def apply(self, f: Polynomial) -> Polynomial:
        """The derivation applied to ``f``."""
        out = Polynomial.zero(self.variables)
        for c, v in zip(self.components, self.variables):
            if not c.is_zero:
                out = out + c * f.diff(v)
        return out

    __call__ = apply

    def evaluate(self, point) -> list[Fraction]:
        return [c.evaluate(point) for c in self.components]

    def evaluate_float(self, point) -> np.ndarray:
        return np.array([c.evaluate_float(point) for c in self.components])

    def substitute(self, mapping) -> "VectorField":
        return VectorField([c.substitute(mapping) for c in self.components])

    def scale(self, f) -> "VectorField":
        return VectorField([f * c for c in self.components])

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField([-c for c in self.components])

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __str__(self):
        parts = []
        for c, v in zip(self.components, self.variables):
            if not c.is_zero:
                parts.append(f"({c})*d/d{v}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"VectorField({[str(c) for c in self.components]})"


class Distribution:
    """Finitely generated module of vector fields."""

    def __init__(self, generators: Iterable[VectorField]):
        gens = tuple(generators)
        if not gens:
            raise ValueError("a distribution needs at least one generator")
        variables = gens[0].variables
        if any(g.variables != variables for g in gens):
            raise ValueError("generators live in different rings")
        self.generators = gens
        self.variables = variables

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def __getitem__(self, i):
        return self.generators[i]

    def __repr__(self):
        return "Distribution(" + "; ".join(str(g) for g in self.generators) + ")"

    def matrix_at(self, point) -> list[list[Fraction]]:
        return [g.evaluate(point) for g in self.generators]

    def matrix_at_float(self, point) -> np.ndarray:
        return np.array([g.evaluate_float(point) for g in self.generators])


@dataclass
class FoliatedSystem:
    """Ambient variables, distribution ``theta``, ideal and divisor.

    Construction validates that every generator of ``theta`` is tangent to
    every divisor component, i.e. ``d(e)`` lies in ``(e)``.
    """

    variables: tuple
    theta: Distribution
    ideal: Ideal
    divisor: tuple = ()
    points: tuple = ()
    name: str = ""
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.divisor = tuple(self.divisor)
        if self.theta.variables != self.variables or self.ideal.variables != self.variables:
            raise ValueError("theta and ideal must share the system variables")
        for e in self.divisor:
            if e.is_zero:
                raise ValueError("divisor components must be nonzero")
            if e.variables != self.variables:
                raise ValueError("divisor lives in a different ring")
        if self.validate:
            self.check_divisor_tangency()

    def check_divisor_tangency(self):
        for i, g in enumerate(self.theta):
            for e in self.divisor:
                de = g.apply(e)
                if not Ideal([e], self.variables).contains(de):
                    raise DivisorTangencyError(
                        f"generator {i} ({g}) is not tangent to divisor component {e}: d({e}) = {de}"
                    )

    @property
    def dim(self) -> int:
        return len(self.variables)

    def on_X(self, point) -> bool:
        return all(g.evaluate(point) == 0 for g in self.ideal.generators)

    def ideal_jacobian(self, point) -> list[list[Fraction]]:
        return [[g.diff(v).evaluate(point) for v in self.variables] for g in self.ideal.generators]


@dataclass(frozen=True)
class PointQT:
    """Quasi-transversality data at one point.

    ``margin`` is the smallest singular value of the stacked orthonormal
    bases of ``L_p`` and ``T_pX`` (floating-point checks only).
    """

    point: tuple
    L_dim: int
    T_dim: int
    sum_dim: int
    verdict: bool
    margin: float | None = None


@dataclass
class InvolutivityReport:
    verdict: bool | None
    witness: tuple | None = None  # (i, j, bracket) of the failing pair
    degree_bound: int = 0


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """``[v, w]_i = sum_j v_j d_j(w_i) - w_j d_j(v_i)``."""
    if v.variables != w.variables:
        raise ValueError("fields live in different rings")
    return VectorField([v.apply(wi) - w.apply(vi) for vi, wi in zip(v.components, w.components)])


def _monomials(nvars: int, max_deg: int):
    for d in range(max_deg + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            yield tuple(e)


def _module_solve(target: VectorField, gens: Sequence[VectorField], degree: int):
    """Polynomial coefficients ``a_k`` (deg <= degree) with sum a_k g_k = target, or None."""
    m = target.dim
    monos = list(_monomials(m, degree))
    nunk = len(gens) * len(monos)
    rows: dict[tuple, dict] = {}
    for k, g in enumerate(gens):
        for a, mono in enumerate(monos):
            col = k * len(monos) + a
            for i, c in enumerate(g.components):
                for e, coef in c.terms.items():
                    key = (i, tuple(x + y for x, y in zip(e, mono)))
                    row = rows.setdefault(key, {})
                    row[col] = row.get(col, 0) + coef
    rhs: dict[tuple, Fraction] = {}
    for i, c in enumerate(target.components):
        for e, coef in c.terms.items():
            rhs[(i, e)] = coef
    for key in rhs:
        rows.setdefault(key, {})
    eqs = ((row, rhs.get(key, 0)) for key, row in rows.items())
    sol = _linalg.solve_sparse(eqs, nunk)
    if sol is None:
        return None
    out = []
    for k in range(len(gens)):
        terms = {monos[a]: sol[k * len(monos) + a] for a in range(len(monos)) if sol[k * len(monos) + a]}
        out.append(Polynomial(target.variables, terms))
    return out


def _pointwise_outside(target: VectorField, gens: Sequence[VectorField], rng, trials: int = 6) -> bool:
    """True if at some random rational point target(p) is outside span{g(p)}."""
    for _ in range(trials):
        p = [Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for _ in target.variables]
        base = [g.evaluate(p) for g in gens]
        if _linalg.rank(base + [target.evaluate(p)], target.dim) > _linalg.rank(base, target.dim):
            return True
    return False


def involutivity_report(theta: Distribution, degree_bound: int | None = None, seed: int = 0) -> InvolutivityReport:
    """Three-valued involutivity test with a failing-bracket witness.

    Each bracket is solved for polynomial module coefficients of degree at
    most ``degree_bound`` (default: max generator degree + 2).  A bracket
    with no such solution is declared outside the module only when a
    rational point separates it from the pointwise span; otherwise the
    verdict is ``None`` (indeterminate).
    """
    gens = list(theta.generators)
    if degree_bound is None:
        degree_bound = max(g.degree() for g in gens) + 2
    rng = random.Random(seed)
    undecided = None
    for i, j in itertools.combinations(range(len(gens)), 2):
        b = lie_bracket(gens[i], gens[j])
        if b.is_zero:
            continue
        if _module_solve(b, gens, degree_bound) is not None:
            continue
        if _pointwise_outside(b, gens, rng):
            return InvolutivityReport(False, (i, j, b), degree_bound)
        if undecided is None:
            undecided = (i, j, b)
    if undecided is not None:
        return InvolutivityReport(None, undecided, degree_bound)
    return InvolutivityReport(True, None, degree_bound)


def is_involutive(theta: Distribution, degree_bound: int | None = None) -> bool | None:
    """``True``, ``False`` or ``None`` when the degree budget is exhausted."""
    return involutivity_report(theta, degree_bound).verdict


def derivative_ideal(theta: Distribution, I: Ideal) -> Ideal:
    """Ideal generated by ``d(f)`` for generators ``d`` of theta and ``f`` of I."""
    return Ideal([d.apply(f) for d in theta for f in I.generators], I.variables)


def iterated_derivative_ideal(theta: Distribution, I: Ideal, k: int) -> Ideal:
    if k < 0:
        raise ValueError("k must be non-negative")
    out = I
    for _ in range(k):
        out = derivative_ideal(theta, out)
    return out


def _iterates(theta, I, n):
    out = [I]
    for _ in range(n):
        out.append(derivative_ideal(theta, out[-1]))
    return out


def _ideal_sum_all(ideals: Sequence[Ideal]) -> Ideal:
    gens = [g for J in ideals for g in J.generators]
    return Ideal(gens, ideals[0].variables)


def fitting_order(theta: Distribution, I: Ideal, nu_max: int = 10) -> int | None:
    """Least ``nu <= nu_max`` with theta^(nu+1)[I] inside the sum of lower iterates."""
    if nu_max < 0:
        raise ValueError("nu_max must be non-negative")
    its = [I]
    for nu in range(nu_max + 1):
        its.append(derivative_ideal(theta, its[-1]))
        if ideal_contains(its[nu + 1], _ideal_sum_all(its[: nu + 1])):
            return nu
    return None


def is_invariant_ideal(theta: Distribution, J: Ideal) -> bool:
    return ideal_contains(derivative_ideal(theta, J), J)


def geometric_qt_at(system: FoliatedSystem, point: Sequence) -> PointQT:
    """Exact check of ``dim L_p + dim T_pX == dim(L_p + T_pX)``."""
    p = [Fraction(v) for v in point]
    if len(p) != system.dim:
        raise ValueError(f"point has {len(p)} coordinates, expected {system.dim}")
    for g in system.ideal.generators:
        val = g.evaluate(p)
        if val != 0:
            raise PointNotOnXError(f"point {tuple(map(str, p))} is not on X: {g} = {val}")
    for e in system.divisor:
        if e.evaluate(p) == 0:
            raise PointOnDivisorError(f"point {tuple(map(str, p))} lies on divisor component {e}")
    m = system.dim
    L_rows = [r for r in system.theta.matrix_at(p) if any(r)]
    L_basis, _ = _linalg.rref(L_rows, m) if L_rows else ([], [])
    T_basis = _linalg.nullspace(system.ideal_jacobian(p), m) if system.ideal.generators else [
        [Fraction(int(i == j)) for j in range(m)] for i in range(m)
    ]
    L_dim, T_dim = len(L_basis), len(T_basis)
    sum_dim = _linalg.rank(list(L_basis) + list(T_basis), m) if (L_basis or T_basis) else 0
    return PointQT(tuple(p), L_dim, T_dim, sum_dim, L_dim + T_dim == sum_dim)


def _orth_rank(M: np.ndarray, tol: float):
    """Orthonormal basis (rows) of the row space of ``M`` with its numeric rank."""
    if M.size == 0:
        return np.zeros((0, M.shape[1] if M.ndim == 2 else 0)), 0
    _, s, vt = np.linalg.svd(M)
    r = int(np.sum(s > tol))
    return vt[:r], r


def numeric_qt(point, L: np.ndarray, jac: np.ndarray, tol: float) -> PointQT:
    """Floating-point quasi-transversality from generator values and ideal Jacobian.

    Singular values below ``tol`` count as zero.  The verdict fails when the
    stacked orthonormal bases of ``L_p`` and ``T_pX`` have a singular value
    below ``tol``.
    """
    m = len(point)
    L = np.atleast_2d(np.asarray(L, dtype=float)).reshape(-1, m)
    jac = np.atleast_2d(np.asarray(jac, dtype=float)).reshape(-1, m)
    Lb, L_dim = _orth_rank(L, tol)
    if jac.shape[0]:
        _, s, vt = np.linalg.svd(jac)
        rJ = int(np.sum(s > tol))
        Tb = vt[rJ:]
    else:
        Tb = np.eye(m)
    T_dim = Tb.shape[0]
    stacked = np.vstack([Lb, Tb]) if (L_dim + T_dim) else np.zeros((0, m))
    if stacked.shape[0] == 0:
        return PointQT(tuple(float(v) for v in point), 0, 0, 0, True, 1.0)
    s = np.linalg.svd(stacked, compute_uv=False)
    sum_dim = int(np.sum(s > tol))
    if stacked.shape[0] > m:
        margin = 0.0
    else:
        margin = float(s[-1]) if len(s) == stacked.shape[0] else 0.0
    verdict = L_dim + T_dim == sum_dim and margin >= tol
    return PointQT(tuple(float(v) for v in point), L_dim, T_dim, sum_dim, verdict, margin)


@dataclass
class ScanReport:
    failures: list
    nodes: int
    projected: int
    skipped: int
    on_divisor: int = 0

    def __iter__(self):
        return iter(self.failures)

    def __len__(self):
        return len(self.failures)

    def __bool__(self):
        # truthy iff there are failures, like the plain list it stands for
        return bool(self.failures)


def _project_newton(gens_f, jac_f, x0, tol, max_iter=50):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        r = gens_f(x)
        if np.max(np.abs(r), initial=0.0) < tol:
            return x
        J = jac_f(x)
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
    return x if np.max(np.abs(gens_f(x)), initial=0.0) < tol else None


def _grid_nodes(box, grid):
    axes = []
    for (lo, hi), n in zip(box, grid):
        if n < 1:
            raise ValueError("grid must be >= 1 per axis")
        lo, hi = float(lo), float(hi)
        axes.append(np.array([(lo + hi) / 2]) if n == 1 else np.linspace(lo, hi, n))
    return axes


def geometric_qt_scan(system: FoliatedSystem, box, grid, tol: float = 1e-8, jobs: int = 1) -> ScanReport:
    """Sampled GQT check over a box.

    Grid nodes are projected to ``X`` by Gauss-Newton on the ideal
    generators; nodes that diverge or leave the box are skipped, nodes on
    the divisor are discarded.  Failures are reported as :class:`PointQT`.
    """
    m = system.dim
    if isinstance(grid, int):
        grid = [grid] * m
    box = [(Fraction(a), Fraction(b)) for a, b in box]
    axes = _grid_nodes(box, grid)
    lo = np.array([float(a) for a, _ in box])
    hi = np.array([float(b) for _, b in box])
    gens = system.ideal.generators
    grads = [[g.diff(v) for v in system.variables] for g in gens]

    def gens_f(x):
        return np.array([g.evaluate_float(x) for g in gens])

    def jac_f(x):
        return np.array([[d.evaluate_float(x) for d in row] for row in grads]).reshape(len(gens), m)

    def work(node):
        x = _project_newton(gens_f, jac_f, node, tol) if gens else np.array(node)
        if x is None or np.any(x < lo - tol) or np.any(x > hi + tol):
            return ("skip", None)
        if any(abs(e.evaluate_float(x)) < tol for e in system.divisor):
            return ("div", None)
        return ("ok", numeric_qt(x, system.theta.matrix_at_float(x), jac_f(x), tol))

    nodes = list(itertools.product(*axes))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(work, nodes))
    else:
        results = [work(n) for n in nodes]
    failures, seen = [], set()
    skipped = on_div = projected = 0
    for kind, res in results:
        if kind == "skip":
            skipped += 1
            continue
        if kind == "div":
            on_div += 1
            continue
        projected += 1
        if not res.verdict:
            key = tuple(np.round(res.point, 9))
            if key not in seen:
                seen.add(key)
                failures.append(res)
    return ScanReport(failures, len(nodes), projected, skipped, on_div)


@dataclass
class AQTReport:
    algebraic: bool
    geometric: bool | None
    checked_points: int
    theta2: Ideal
    locus: Ideal

    @property
    def verdict(self) -> bool:
        return self.algebraic and self.geometric is not False


def is_analytically_qt(system: FoliatedSystem) -> bool:
    """The algebraic condition ``theta^2[I] in I + theta[I]`` only."""
    t1 = derivative_ideal(system.theta, system.ideal)
    t2 = derivative_ideal(system.theta, t1)
    return ideal_contains(t2, ideal_sum(system.ideal, t1))


def aqt_report(system: FoliatedSystem) -> AQTReport:
    """Algebraic condition plus exact GQT at the system's stored points."""
    t1 = derivative_ideal(system.theta, system.ideal)
    t2 = derivative_ideal(system.theta, t1)
    locus = ideal_sum(system.ideal, t1)
    alg = ideal_contains(t2, locus)
    geo = None
    n = 0
    for p in system.points:
        try:
            r = geometric_qt_at(system, p)
        except (PointNotOnXError, PointOnDivisorError):
            continue
        n += 1
        geo = r.verdict if geo is None else (geo and r.verdict)
    return AQTReport(alg, geo, n, t2, locus)


def tangency_locus(system: FoliatedSystem) -> Ideal:
    return ideal_sum(system.ideal, derivative_ideal(system.theta, system.ideal))


def regular_curve_aqt_check(system: FoliatedSystem) -> bool:
    """Invariance of ``J = I + theta[I]`` for a regular curve cut out by affine generators.

    The ideal generators must be affine-linear and of joint rank ``m - 1``.
    """
    m = system.dim
    rows = []
    for g in system.ideal.generators:
        if g.total_degree() > 1:
            raise PreconditionError(f"ideal generator {g} is not affine-linear")
        rows.append([g.diff(v).constant_value() for v in system.variables])
    if _linalg.rank(rows, m) != m - 1:
        raise PreconditionError(
            f"ideal generators have rank {_linalg.rank(rows, m) if rows else 0}, a regular curve needs {m - 1}"
        )
    J = tangency_locus(system)
    return ideal_contains(derivative_ideal(system.theta, J), J)
