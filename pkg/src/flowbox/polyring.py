"""Exact sparse multivariate polynomials over Q and Groebner-basis ideal tests.

Polynomials are immutable maps from exponent tuples to nonzero
:class:`fractions.Fraction` coefficients.  Ideals keep their generators as
given and lazily cache a reduced Groebner basis per monomial order.
"""
from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Polynomial",
    "MonomialOrder",
    "GREVLEX",
    "LEX",
    "Ideal",
    "PolynomialSyntaxError",
    "UnknownVariableError",
    "GroebnerBudgetError",
    "parse_polynomial",
    "differentiate",
    "groebner_basis",
    "ideal_member",
    "ideal_contains",
    "ideal_sum",
    "ideal_product",
    "s_polynomial",
    "normal_form",
    "DEFAULT_SPAIR_BUDGET",
]

DEFAULT_SPAIR_BUDGET = 100_000


class PolynomialSyntaxError(ValueError):
    """Raised by :func:`parse_polynomial`; carries the 1-based column."""

    def __init__(self, message: str, text: str, column: int):
        super().__init__(f"{message} at column {column}: {text!r}")
        self.text = text
        self.column = column


class UnknownVariableError(KeyError):
    def __init__(self, name: str, variables: Sequence[str]):
        super().__init__(f"unknown variable {name!r}; ring variables are {list(variables)}")
        self.name = name

    def __str__(self):  # KeyError quotes its argument otherwise
        return self.args[0]


class GroebnerBudgetError(RuntimeError):
    """The S-pair budget was exhausted before the basis completed."""


Exponent = tuple


class Polynomial:
    """Sparse polynomial with exact rational coefficients.

    Parameters
    ----------
    variables : sequence of str
        Ordered ring variables; exponent tuples follow this order.
    terms : mapping, optional
        Exponent tuple -> coefficient (anything :class:`Fraction` accepts).
    """

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Mapping | None = None):
        self.variables = tuple(variables)
        n = len(self.variables)
        clean: dict = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {n} variables")
            c = clean.get(exp, 0) + Fraction(coeff)
            if c:
                clean[exp] = c
            else:
                clean.pop(exp, None)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, variables: tuple, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        obj._hash = None
        return obj

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, variables) -> "Polynomial":
        return cls._raw(tuple(variables), {})

    @classmethod
    def constant(cls, variables, value) -> "Polynomial":
        variables = tuple(variables)
        value = Fraction(value)
        return cls._raw(variables, {(0,) * len(variables): value} if value else {})

    @classmethod
    def variable(cls, variables, name: str) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise UnknownVariableError(name, variables)
        exp = tuple(int(v == name) for v in variables)
        return cls._raw(variables, {exp: Fraction(1)})

    @classmethod
    def parse(cls, text: str, variables) -> "Polynomial":
        return parse_polynomial(text, variables)

    # basic queries -----------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        i = self._index(name)
        return max((e[i] for e in self.terms), default=-1)

    def _index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise UnknownVariableError(name, self.variables) from None

    def _check(self, other: "Polynomial"):
        if other.variables != self.variables:
            raise ValueError(
                f"variable mismatch: {self.variables} vs {other.variables}"
            )

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.variables, other)
        return NotImplemented

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        res = dict(self.terms)
        for e, c in other.terms.items():
            v = res.get(e, 0) + c
            if v:
                res[e] = v
            else:
                res.pop(e, None)
        return Polynomial._raw(self.variables, res)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if not other:
                return Polynomial.zero(self.variables)
            return Polynomial._raw(self.variables, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        res: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = res.get(e, 0) + c1 * c2
                if v:
                    res[e] = v
                else:
                    res.pop(e, None)
        return Polynomial._raw(self.variables, res)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a non-negative integer")
        result = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def mul_term(self, exp: Exponent, coeff: Fraction) -> "Polynomial":
        return Polynomial._raw(
            self.variables,
            {tuple(a + b for a, b in zip(e, exp)): c * coeff for e, c in self.terms.items()},
        )

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.variables, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # calculus and evaluation -------------------------------------------
    def diff(self, name: str) -> "Polynomial":
        i = self._index(name)
        res = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                res[ne] = c * e[i]
        return Polynomial._raw(self.variables, res)

    def evaluate(self, point: Sequence) -> Fraction:
        """Exact value at a rational point."""
        if len(point) != self.nvars:
            raise ValueError("point dimension does not match variable count")
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for v, k in zip(pt, e):
                if k:
                    term *= v ** k
            total += term
        return total

    def evaluate_float(self, point) -> float:
        total = 0.0
        for e, c in self.terms.items():
            term = float(c)
            for v, k in zip(point, e):
                if k:
                    term *= v ** k
            total += term
        return total

    def substitute(self, mapping: Mapping[str, "Polynomial"]) -> "Polynomial":
        """Replace variables by polynomials in the same ring."""
        images = []
        for name in self.variables:
            img = mapping.get(name)
            if img is None:
                img = Polynomial.variable(self.variables, name)
            else:
                self._check(img)
            images.append(img)
        result = Polynomial.zero(self.variables)
        powers: dict = {}
        for e, c in self.terms.items():
            term = Polynomial.constant(self.variables, c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in powers:
                        powers[key] = images[i] ** k
                    term = term * powers[key]
            result = result + term
        return result

    def with_variables(self, variables: Sequence[str]) -> "Polynomial":
        """Re-embed into a ring whose variables include all used ones."""
        variables = tuple(variables)
        idx = []
        for name in self.variables:
            idx.append(variables.index(name) if name in variables else None)
        res = {}
        for e, c in self.terms.items():
            ne = [0] * len(variables)
            for i, k in enumerate(e):
                if k:
                    if idx[i] is None:
                        raise UnknownVariableError(self.variables[i], variables)
                    ne[idx[i]] = k
            res[tuple(ne)] = c
        return Polynomial._raw(variables, res)

    def divide_by_variable(self, name: str, power: int = 1) -> "Polynomial | None":
        """Exact division by ``name**power``; ``None`` if not divisible."""
        i = self._index(name)
        res = {}
        for e, c in self.terms.items():
            if e[i] < power:
                return None
            res[e[:i] + (e[i] - power,) + e[i + 1:]] = c
        return Polynomial._raw(self.variables, res)

    def variable_valuation(self, name: str) -> int:
        """Largest k with name**k dividing self (0 for the zero polynomial)."""
        i = self._index(name)
        return min((e[i] for e in self.terms), default=0)

    # orders -------------------------------------------------------------
    def leading_term(self, order: "MonomialOrder | None" = None):
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        key = (order or GREVLEX).key
        e = max(self.terms, key=key)
        return e, self.terms[e]

    def monic(self, order: "MonomialOrder | None" = None) -> "Polynomial":
        if not self.terms:
            return self
        _, lc = self.leading_term(order)
        return self * (1 / lc)

    # display --------------------------------------------------------------
    def sorted_terms(self, order: "MonomialOrder | None" = None):
        key = (order or GREVLEX).key
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}"
                for name, k in zip(self.variables, e)
                if k
            )
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if mono:
                body = mono if a == 1 else f"{a}*{mono}"
            else:
                body = str(a)
            out.append((sign, body))
        first_sign, first = out[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Polynomial({str(self)!r}, {list(self.variables)})"


# ---------------------------------------------------------------------------
# monomial orders


@dataclass(frozen=True)
class MonomialOrder:
    """Monomial order on exponent tuples.

    ``permutation`` lists variable indices from most to least significant;
    ``None`` means the ring order.
    """

    kind: str = "grevlex"
    permutation: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("grevlex", "lex"):
            raise ValueError(f"unsupported monomial order {self.kind!r}")

    def key(self, exp):
        perm = self.permutation
        if perm is None:
            if self.kind == "lex":
                return exp
            return (sum(exp),) + tuple(-e for e in reversed(exp))
        if self.kind == "lex":
            return tuple(exp[i] for i in perm)
        return (sum(exp),) + tuple(-exp[i] for i in reversed(perm))

    @property
    def tag(self) -> str:
        return self.kind if self.permutation is None else f"{self.kind}{list(self.permutation)}"


GREVLEX = MonomialOrder("grevlex")
LEX = MonomialOrder("lex")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<float>\d*\.\d+(?:[eE][-+]?\d+)?|\d+\.\d*(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)"
    r"|(?P<frac>\d+\s*/\s*\d+)|(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^]))"
)


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``3/2*x^2*y - y`` style text.

    Terms are joined by ``+``/``-``; factors by ``*``; a factor is a
    non-negative integer, a ``p/q`` rational or ``var[^exp]``.  Floating-point
    literals are rejected.
    """
    variables = tuple(variables)
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN.match(stripped, pos)
        if not m or m.end() == pos:
            col = pos + 1 + (len(stripped[pos:]) - len(stripped[pos:].lstrip()))
            raise PolynomialSyntaxError("unexpected character", text, col)
        kind = m.lastgroup
        col = m.start(kind) + 1
        if kind == "float":
            raise PolynomialSyntaxError(
                "floating-point literal not allowed (use p/q)", text, col
            )
        tokens.append((kind, m.group(kind), col))
        pos = m.end()
    if not tokens:
        raise PolynomialSyntaxError("empty polynomial", text, 1)

    result = Polynomial.zero(variables)
    i = 0
    n = len(tokens)
    expect_term = True
    sign = 1
    while i < n:
        kind, val, col = tokens[i]
        if kind == "op" and val in "+-" and expect_term:
            if i > 0:
                raise PolynomialSyntaxError("repeated sign", text, col)
            if val == "-":
                sign = -sign
            i += 1
            continue
        if not expect_term:
            if kind == "op" and val in "+-":
                expect_term = True
                sign = -1 if val == "-" else 1
                i += 1
                continue
            raise PolynomialSyntaxError("expected '+' or '-'", text, col)
        # parse a term: factor ('*' factor)*
        coeff = Fraction(sign)
        exp = [0] * len(variables)
        while True:
            if i >= n:
                raise PolynomialSyntaxError("unexpected end of input", text, len(text) + 1)
            kind, val, col = tokens[i]
            if kind == "int":
                coeff *= int(val)
                i += 1
            elif kind == "frac":
                p, q = (int(s) for s in val.split("/"))
                if q == 0:
                    raise PolynomialSyntaxError("zero denominator", text, col)
                coeff *= Fraction(p, q)
                i += 1
            elif kind == "name":
                if val not in variables:
                    raise PolynomialSyntaxError(f"unknown variable {val!r}", text, col)
                k = 1
                i += 1
                if i < n and tokens[i][0] == "op" and tokens[i][1] == "^":
                    if i + 1 >= n or tokens[i + 1][0] != "int":
                        c2 = tokens[i + 1][2] if i + 1 < n else len(text) + 1
                        raise PolynomialSyntaxError("exponent must be a non-negative integer", text, c2)
                    k = int(tokens[i + 1][1])
                    i += 2
                exp[variables.index(val)] += k
            else:
                raise PolynomialSyntaxError(f"unexpected {val!r}", text, col)
            if i < n and tokens[i][0] == "op" and tokens[i][1] == "*":
                i += 1
                continue
            break
        result = result + Polynomial._raw(variables, {tuple(exp): coeff} if coeff else {})
        expect_term = False
        sign = 1
    if expect_term:
        raise PolynomialSyntaxError("dangling operator", text, tokens[-1][2])
    return result


def differentiate(f: Polynomial, var: str) -> Polynomial:
    """Exact partial derivative of ``f`` with respect to ``var``."""
    return f.diff(var)


# ---------------------------------------------------------------------------
# Groebner machinery on raw term dicts


def _divides(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


class _GPoly:
    """Basis element with cached leading data."""

    __slots__ = ("terms", "lm", "lc")

    def __init__(self, terms: dict, key):
        self.terms = terms
        self.lm = max(terms, key=key)
        self.lc = terms[self.lm]


def _reduce_terms(terms: dict, basis: Sequence[_GPoly], key, full: bool = True) -> dict:
    """Normal form of ``terms`` modulo ``basis`` (a list of _GPoly)."""
    p = dict(terms)
    r: dict = {}
    while p:
        m = max(p, key=key)
        c = p[m]
        for g in basis:
            if _divides(g.lm, m):
                shift = tuple(a - b for a, b in zip(m, g.lm))
                f = c / g.lc
                for e, gc in g.terms.items():
                    ne = tuple(a + b for a, b in zip(e, shift))
                    v = p.get(ne, 0) - f * gc
                    if v:
                        p[ne] = v
                    else:
                        p.pop(ne, None)
                break
        else:
            if not full:
                r.update(p)
                return r
            r[m] = c
            del p[m]
    return r


def _monic_terms(terms: dict, key) -> dict:
    lm = max(terms, key=key)
    inv = 1 / terms[lm]
    return {e: c * inv for e, c in terms.items()}


def _spoly_terms(f: _GPoly, g: _GPoly) -> dict:
    l = _lcm(f.lm, g.lm)
    sf = tuple(a - b for a, b in zip(l, f.lm))
    sg = tuple(a - b for a, b in zip(l, g.lm))
    res: dict = {}
    for e, c in f.terms.items():
        ne = tuple(a + b for a, b in zip(e, sf))
        res[ne] = res.get(ne, 0) + c / f.lc
    for e, c in g.terms.items():
        ne = tuple(a + b for a, b in zip(e, sg))
        v = res.get(ne, 0) - c / g.lc
        if v:
            res[ne] = v
        else:
            res.pop(ne, None)
    return {e: c for e, c in res.items() if c}


def _buchberger(polys: list[dict], key, budget: int) -> list[dict]:
    """Reduced Groebner basis (monic term dicts) via Buchberger with
    Gebauer-Moeller pair management."""
    G: list[_GPoly] = []
    active: list[int] = []
    pairs: list[tuple[int, int]] = []

    def update(hidx: int):
        nonlocal active, pairs
        h = G[hidx]
        cand = [(a, _lcm(G[a].lm, h.lm)) for a in active]
        keep = []
        for i, (a, l) in enumerate(cand):
            coprime = all(x == 0 or y == 0 for x, y in zip(G[a].lm, h.lm))
            if coprime:
                keep.append((a, l, True))
                continue
            dominated = False
            for j, (b, l2) in enumerate(cand):
                if j == i:
                    continue
                if _divides(l2, l) and (l2 != l or j < i):
                    dominated = True
                    break
            if not dominated:
                keep.append((a, l, False))
        new_pairs = [(a, hidx) for a, _, coprime in keep if not coprime]
        old = []
        for a, b in pairs:
            l = _lcm(G[a].lm, G[b].lm)
            if (
                _divides(h.lm, l)
                and _lcm(G[a].lm, h.lm) != l
                and _lcm(G[b].lm, h.lm) != l
            ):
                continue
            old.append((a, b))
        pairs = old + new_pairs
        active = [a for a in active if not _divides(h.lm, G[a].lm)] + [hidx]

    for t in polys:
        if not t:
            continue
        red = _reduce_terms(t, [G[a] for a in active], key)
        if red:
            G.append(_GPoly(_monic_terms(red, key), key))
            update(len(G) - 1)

    processed = 0
    while pairs:
        best = min(
            range(len(pairs)),
            key=lambda i: (key(_lcm(G[pairs[i][0]].lm, G[pairs[i][1]].lm)), pairs[i]),
        )
        a, b = pairs.pop(best)
        processed += 1
        if processed > budget:
            raise GroebnerBudgetError(f"S-pair budget of {budget} exhausted")
        s = _spoly_terms(G[a], G[b])
        if not s:
            continue
        h = _reduce_terms(s, [G[i] for i in active], key)
        if h:
            G.append(_GPoly(_monic_terms(h, key), key))
            update(len(G) - 1)

    # minimal then reduced
    basis = [G[i] for i in active]
    basis.sort(key=lambda g: key(g.lm))
    minimal: list[_GPoly] = []
    for g in basis:
        if not any(_divides(o.lm, g.lm) for o in minimal):
            minimal.append(g)
    reduced = []
    for i, g in enumerate(minimal):
        others = minimal[:i] + minimal[i + 1:]
        t = _reduce_terms(g.terms, others, key)
        reduced.append(_monic_terms(t, key))
    reduced.sort(key=lambda t: key(max(t, key=key)), reverse=True)
    return reduced


# ---------------------------------------------------------------------------
# ideals


class Ideal:
    """Ideal given by a generator list, with a cached reduced Groebner basis.

    Zero generators are pruned.  Inclusion tests concern the ideal generated
    by the supplied polynomials, not its radical.
    """

    def __init__(self, generators: Iterable[Polynomial] = (), variables: Sequence[str] | None = None):
        gens = list(generators)
        if variables is None:
            if not gens:
                raise ValueError("an ideal with no generators needs explicit variables")
            variables = gens[0].variables
        self.variables = tuple(variables)
        out = []
        seen = set()
        for g in gens:
            if g.variables != self.variables:
                raise ValueError(f"generator {g} lives in {g.variables}, expected {self.variables}")
            if g.is_zero or g in seen:
                continue
            seen.add(g)
            out.append(g)
        self.generators: tuple[Polynomial, ...] = tuple(out)
        self._basis: dict = {}
        self._lock = threading.Lock()

    @classmethod
    def parse(cls, texts: Iterable[str], variables: Sequence[str]) -> "Ideal":
        return cls([parse_polynomial(t, variables) for t in texts], variables)

    @classmethod
    def unit(cls, variables) -> "Ideal":
        return cls([Polynomial.constant(variables, 1)], variables)

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def __repr__(self):
        return "Ideal(" + ", ".join(str(g) for g in self.generators) + ")"

    @property
    def is_zero(self) -> bool:
        return not self.generators

    def groebner(self, order: MonomialOrder = GREVLEX, budget: int = DEFAULT_SPAIR_BUDGET) -> tuple[Polynomial, ...]:
        """Reduced monic Groebner basis, computed once per order."""
        cached = self._basis.get(order)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._basis.get(order)
            if cached is None:
                raw = _buchberger([dict(g.terms) for g in self.generators], order.key, budget)
                cached = tuple(Polynomial._raw(self.variables, t) for t in raw)
                self._basis[order] = cached
        return cached

    def reduce(self, f: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
        if f.variables != self.variables:
            raise ValueError(f"{f} lives in {f.variables}, expected {self.variables}")
        basis = [_GPoly(dict(g.terms), order.key) for g in self.groebner(order)]
        return Polynomial._raw(self.variables, _reduce_terms(dict(f.terms), basis, order.key))

    def contains(self, f: Polynomial, order: MonomialOrder = GREVLEX) -> bool:
        if f.is_zero:
            return True
        return self.reduce(f, order).is_zero

    __contains__ = contains

    @property
    def is_unit(self) -> bool:
        return self.contains(Polynomial.constant(self.variables, 1))

    def issubset(self, other: "Ideal") -> bool:
        return ideal_contains(self, other)

    def equals(self, other: "Ideal") -> bool:
        return ideal_contains(self, other) and ideal_contains(other, self)

    def __add__(self, other: "Ideal") -> "Ideal":
        return ideal_sum(self, other)

    def __mul__(self, other: "Ideal") -> "Ideal":
        return ideal_product(self, other)


def normal_form(f: Polynomial, basis: Sequence[Polynomial], order: MonomialOrder = GREVLEX) -> Polynomial:
    """Full reduction of ``f`` by an arbitrary polynomial list."""
    key = order.key
    gs = [_GPoly(dict(g.terms), key) for g in basis if not g.is_zero]
    return Polynomial._raw(f.variables, _reduce_terms(dict(f.terms), gs, key))


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
    key = order.key
    return Polynomial._raw(f.variables, _spoly_terms(_GPoly(dict(f.terms), key), _GPoly(dict(g.terms), key)))


def groebner_basis(ideal: Ideal, order: MonomialOrder = GREVLEX, budget: int = DEFAULT_SPAIR_BUDGET) -> Ideal:
    """Return the reduced Groebner basis of ``ideal`` as a new :class:`Ideal`.

    Raises :class:`GroebnerBudgetError` if more than ``budget`` S-pairs are
    processed.
    """
    basis = ideal.groebner(order, budget)
    out = Ideal(basis, ideal.variables)
    out._basis[order] = basis
    return out


def ideal_member(f: Polynomial, ideal: Ideal) -> bool:
    """True iff ``f`` reduces to zero modulo the Groebner basis of ``ideal``."""
    return ideal.contains(f)


def ideal_contains(J: Ideal, I: Ideal) -> bool:
    """True iff every generator of ``J`` lies in ``I`` (i.e. J is a subset of I)."""
    if J.variables != I.variables:
        raise ValueError("ideals live in different rings")
    return all(I.contains(g) for g in J.generators)


def ideal_sum(I: Ideal, J: Ideal) -> Ideal:
    if I.variables != J.variables:
        raise ValueError("ideals live in different rings")
    return Ideal(I.generators + J.generators, I.variables)


def ideal_product(I: Ideal, J: Ideal) -> Ideal:
    if I.variables != J.variables:
        raise ValueError("ideals live in different rings")
    return Ideal([f * g for f in I.generators for g in J.generators], I.variables)
