"""Numeric callables with declared closed forms.

Closed forms are sympy expressions over the ambient variables, built from
polynomials, ``sin``, ``cos`` and the lemma branch ``h``.  Evaluation is
float64 through :func:`sympy.lambdify`.  When every component is a
polynomial with rational coefficients the map is also packed into flat
arrays for the compiled kernels.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from . import hbranch
from .polyring import Polynomial

__all__ = [
    "h",
    "hprime",
    "AnalyticMap",
    "AnalyticField",
    "PackedPoly",
    "DomainError",
    "AnalyticSyntaxError",
    "parse_analytic",
    "polynomial_to_sympy",
]


class DomainError(ValueError):
    """Evaluation outside the declared domain of a field or map."""


class AnalyticSyntaxError(ValueError):
    pass


class h(sp.Function):
    """Lemma branch: ``(1+s^2) cos(h) sin(h) = h`` with ``h(s) ~ s*sqrt(6)/2``."""

    @classmethod
    def eval(cls, s):
        if s.is_zero:
            return sp.S.Zero

    def fdiff(self, argindex=1):
        return hprime(self.args[0])


class hprime(sp.Function):
    @classmethod
    def eval(cls, s):
        if s.is_zero:
            return sp.sqrt(6) / 2


_NUMERIC_MODULES = [{"h": hbranch.h_values, "hprime": hbranch.h_prime_values}, "numpy"]
_ALLOWED_FUNCS = {"sin": sp.sin, "cos": sp.cos, "h": h}
_FLOAT_LITERAL = re.compile(r"(?<![A-Za-z_\d])(\d*\.\d+|\d+\.\d*|\d+[eE][-+]?\d+)")


def parse_analytic(text: str, variables: Sequence[str]) -> sp.Expr:
    """Parse an expression using ``+ - * / ^``, parentheses, ``sin``, ``cos`` and ``h``."""
    m = _FLOAT_LITERAL.search(text)
    if m:
        raise AnalyticSyntaxError(
            f"floating-point literal not allowed at column {m.start() + 1}: {text!r}"
        )
    symbols = {v: sp.Symbol(v, real=True) for v in variables}
    local = dict(symbols)
    local.update(_ALLOWED_FUNCS)
    global_dict = {"Integer": sp.Integer, "Rational": sp.Rational, "Symbol": sp.Symbol, "Function": sp.Function}
    try:
        expr = parse_expr(
            text,
            local_dict=local,
            global_dict=global_dict,
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except Exception as exc:  # sympy raises a zoo of types here
        raise AnalyticSyntaxError(f"cannot parse {text!r}: {exc}") from None
    extra = {str(s) for s in expr.free_symbols} - set(variables)
    if extra:
        raise AnalyticSyntaxError(f"unknown symbols {sorted(extra)} in {text!r}")
    for f in expr.atoms(sp.Function):
        if f.func not in (sp.sin, sp.cos, h):
            raise AnalyticSyntaxError(f"function {f.func} not permitted in {text!r}")
    return expr


def polynomial_to_sympy(p: Polynomial, symbols: Sequence[sp.Symbol]) -> sp.Expr:
    expr = sp.S.Zero
    for e, c in p.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for s, k in zip(symbols, e):
            if k:
                term *= s**k
        expr += term
    return expr


@dataclass(frozen=True)
class PackedPoly:
    """Flat polynomial family: ``out[comp[k]] += coef[k] * prod(x**exps[k])``."""

    exps: np.ndarray
    coef: np.ndarray
    comp: np.ndarray
    nout: int

    @classmethod
    def from_polynomials(cls, polys: Sequence[Polynomial], dim: int) -> "PackedPoly":
        exps, coef, comp = [], [], []
        for i, p in enumerate(polys):
            for e, c in p.terms.items():
                exps.append(e)
                coef.append(float(c))
                comp.append(i)
        return cls(
            np.asarray(exps, dtype=np.int64).reshape(-1, dim),
            np.asarray(coef, dtype=float),
            np.asarray(comp, dtype=np.int64),
            len(polys),
        )

    @classmethod
    def stack(cls, packs: Sequence["PackedPoly"]) -> "PackedPoly":
        offset = 0
        comps = []
        for p in packs:
            comps.append(p.comp + offset)
            offset += p.nout
        dim = packs[0].exps.shape[1]
        return cls(
            np.concatenate([p.exps for p in packs]).reshape(-1, dim),
            np.concatenate([p.coef for p in packs]),
            np.concatenate(comps).astype(np.int64),
            offset,
        )


def _sympy_poly_terms(expr: sp.Expr, symbols):
    """Exponent/coefficient terms if ``expr`` is a rational polynomial."""
    try:
        poly = sp.Poly(expr, *symbols)
    except sp.PolynomialError:
        return None
    if not poly.domain.is_QQ and not poly.domain.is_ZZ:
        return None
    return poly.terms()


class AnalyticMap:
    """Vector of closed-form expressions evaluated numerically.

    Parameters
    ----------
    variables : sequence of str
    exprs : sequence of sympy expressions or strings
    domain : sequence of (lo, hi), optional
        Axis-aligned box; evaluation outside raises :class:`DomainError`.
    """

    def __init__(self, variables: Sequence[str], exprs, domain=None):
        self.variables = tuple(variables)
        self.symbols = tuple(sp.Symbol(v, real=True) for v in self.variables)
        out = []
        for e in exprs:
            if isinstance(e, str):
                e = parse_analytic(e, self.variables)
            elif isinstance(e, Polynomial):
                e = polynomial_to_sympy(e.with_variables(self.variables), self.symbols)
            out.append(sp.sympify(e))
        self.exprs = tuple(out)
        if domain is not None:
            lo = np.array([float(a) for a, _ in domain])
            hi = np.array([float(b) for _, b in domain])
            self.domain = (lo, hi)
        else:
            self.domain = None
        self._fn = None
        self._packed = False

    def __len__(self):
        return len(self.exprs)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def _compile(self):
        if self._fn is None:
            if self.exprs:
                self._fn = sp.lambdify(self.symbols, list(self.exprs), modules=_NUMERIC_MODULES)
            else:
                self._fn = lambda *a: []
        return self._fn

    def check_domain(self, x):
        if self.domain is None:
            return
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"point {x.tolist()} outside declared domain")

    def __call__(self, x) -> np.ndarray:
        """Evaluate at one point (shape ``(dim,)``) or a batch ``(N, dim)``."""
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        fn = self._compile()
        if x.ndim == 1:
            vals = fn(*x)
            return np.array([float(v) for v in vals], dtype=float)
        cols = fn(*x.T)
        n = x.shape[0]
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in cols], axis=1) if cols else np.zeros((n, 0))

    @property
    def packed(self) -> PackedPoly | None:
        """Packed form when all components are rational polynomials."""
        if self._packed is False:
            exps, coef, comp = [], [], []
            ok = True
            for i, e in enumerate(self.exprs):
                terms = _sympy_poly_terms(e, self.symbols)
                if terms is None:
                    ok = False
                    break
                for mono, c in terms:
                    exps.append(mono)
                    coef.append(float(c))
                    comp.append(i)
            if ok:
                self._packed = PackedPoly(
                    np.asarray(exps, dtype=np.int64).reshape(-1, self.dim),
                    np.asarray(coef, dtype=float),
                    np.asarray(comp, dtype=np.int64),
                    len(self.exprs),
                )
            else:
                self._packed = None
        return self._packed

    def jacobian(self) -> "AnalyticMap":
        """Row-major flattened Jacobian as a map with ``len*dim`` outputs."""
        rows = [sp.diff(e, s) for e in self.exprs for s in self.symbols]
        return AnalyticMap(self.variables, rows, None)

    def jacobian_at(self, x) -> np.ndarray:
        if not hasattr(self, "_jac"):
            self._jac = self.jacobian()
        return self._jac(x).reshape(len(self.exprs), self.dim)

    def subs(self, mapping) -> "AnalyticMap":
        return AnalyticMap(self.variables, [e.subs(mapping) for e in self.exprs], None)

    def __repr__(self):
        return f"{type(self).__name__}({list(self.variables)}, {[str(e) for e in self.exprs]})"


class AnalyticField(AnalyticMap):
    """Vector field: one closed-form component per ambient variable."""

    def __init__(self, variables, exprs, domain=None, singular_guard=None):
        super().__init__(variables, exprs, domain)
        if len(self.exprs) != len(self.variables):
            raise ValueError(
                f"field needs {len(self.variables)} components, got {len(self.exprs)}"
            )
        # guard(x) raises DomainError where the closed form has a pole
        self.singular_guard = singular_guard

    @classmethod
    def from_polynomials(cls, components: Sequence[Polynomial], domain=None) -> "AnalyticField":
        variables = components[0].variables
        return cls(variables, list(components), domain)

    def __call__(self, x):
        if self.singular_guard is not None:
            self.singular_guard(np.asarray(x, dtype=float))
        return super().__call__(x)

    def reversed(self) -> "AnalyticField":
        return AnalyticField(self.variables, [-e for e in self.exprs], self._domain_pairs(), self.singular_guard)

    def _domain_pairs(self):
        if self.domain is None:
            return None
        return list(zip(self.domain[0], self.domain[1]))

    def apply(self, expr: sp.Expr) -> sp.Expr:
        """Lie derivative of a scalar expression along the field."""
        return sp.expand(sum(c * sp.diff(expr, s) for c, s in zip(self.exprs, self.symbols)))

    def norm(self, x) -> float:
        return float(np.linalg.norm(self(x)))
