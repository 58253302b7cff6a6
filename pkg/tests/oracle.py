"""Independent membership oracle: degree-bounded cofactor search over GF(p).

``f`` is in ``(g_1..g_k)`` with a certificate of cofactor degree <= D iff
the linear system ``sum_i h_i g_i = f`` in the coefficients of the ``h_i``
is consistent.  Solving modulo a large prime avoids rational blow-up; a
wrong answer needs ``p`` to divide a specific minor, which the fixed seeds
below never hit.
"""
from __future__ import annotations

import itertools

import numpy as np

P = 2_147_483_629  # prime below 2^31, so products fit in int64


def _monomials(n, d):
    return [e for k in range(d + 1) for e in itertools.product(range(k + 1), repeat=n) if sum(e) == k]


def _modp(c):
    return (c.numerator % P) * pow(c.denominator % P, P - 2, P) % P


def _rank_mod_p(M):
    M = M.copy() % P
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i, c]), None)
        if piv is None:
            continue
        M[[r, piv]] = M[[piv, r]]
        inv = pow(int(M[r, c]), P - 2, P)
        M[r] = (M[r] * inv) % P
        nz = np.nonzero(M[:, c])[0]
        nz = nz[nz != r]
        if nz.size:
            M[nz] = (M[nz] - np.outer(M[nz, c], M[r]) % P) % P
        r += 1
        if r == rows:
            break
    return r


def member(f, gens, D=6) -> bool:
    """Is ``f`` a combination of ``gens`` with cofactors of degree <= D?"""
    if f.is_zero:
        return True
    gens = [g for g in gens if not g.is_zero]
    if not gens:
        return False
    n = f.nvars
    cof = _monomials(n, D)
    top = D + max(g.total_degree() for g in gens)
    rows = {m: i for i, m in enumerate(_monomials(n, max(top, f.total_degree())))}
    A = np.zeros((len(rows), len(gens) * len(cof)), dtype=np.int64)
    for gi, g in enumerate(gens):
        for ci, m in enumerate(cof):
            for e, c in g.terms.items():
                A[rows[tuple(a + b for a, b in zip(e, m))], gi * len(cof) + ci] = _modp(c)
    b = np.zeros((len(rows), 1), dtype=np.int64)
    for e, c in f.terms.items():
        b[rows[e], 0] = _modp(c)
    return _rank_mod_p(A) == _rank_mod_p(np.hstack([A, b]))


def random_poly(rng, variables, max_deg, nterms, coeff=3, nonconstant=False):
    """Sparse random polynomial with small integer coefficients."""
    from fractions import Fraction

    from flowbox.polyring import Polynomial

    mons = _monomials(len(variables), max_deg)
    if nonconstant:
        mons = mons[1:]
    while True:
        terms = {}
        for _ in range(nterms):
            e = mons[rng.randrange(len(mons))]
            c = rng.randint(-coeff, coeff)
            if c:
                terms[e] = terms.get(e, Fraction(0)) + c
        p = Polynomial(variables, terms)
        if not p.is_zero and (not nonconstant or not p.is_constant):
            return p


def random_membership_instance(rng):
    """Ideal with <= 3 generators in <= 3 variables of degree <= 3 and a degree <= 3 query.

    Half of the queries are built as combinations of the generators, the
    rest are random.
    """
    from flowbox.polyring import Ideal, Polynomial

    n = rng.randint(2, 3)
    V = ("x", "y", "z")[:n]
    k = rng.randint(1, min(n, 3))
    gens = [random_poly(rng, V, rng.randint(1, 3), rng.randint(1, 3), nonconstant=True) for _ in range(k)]
    if rng.random() < 0.5:
        f = Polynomial.zero(V)
        for g in gens:
            room = 3 - g.total_degree()
            f = f + (random_poly(rng, V, room, 2) * g if rng.random() < 0.8 else Polynomial.zero(V))
        if f.is_zero:
            f = gens[0]
    else:
        f = random_poly(rng, V, 3, rng.randint(1, 4))
    return Ideal(gens, V), f
