"""Exact rational linear algebra on small dense or sparse systems."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

__all__ = ["rref", "rank", "nullspace", "solve_sparse"]


def rref(rows: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form over the rationals.

    Returns ``(matrix, pivot_columns)``; zero rows are dropped.
    """
    mat = [[Fraction(v) for v in row] for row in rows]
    if ncols is None:
        ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                factor = mat[i][c]
                mat[i] = [a - factor * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    if not rows:
        return 0
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{v : rows @ v = 0}``."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def solve_sparse(equations, nunknowns: int):
    """Solve a sparse rational system.

    ``equations`` is an iterable of ``(coeffs, rhs)`` with ``coeffs`` a dict
    mapping unknown index to coefficient.  Returns one solution as a list
    (free unknowns set to zero) or ``None`` when inconsistent.
    """
    pivot_rows: dict[int, tuple[dict, Fraction]] = {}
    order: list[int] = []
    for coeffs, rhs in equations:
        row = {k: Fraction(v) for k, v in coeffs.items() if v != 0}
        rhs = Fraction(rhs)
        # eliminate against existing pivots until stable
        changed = True
        while changed and row:
            changed = False
            for k in sorted(row):
                if k in pivot_rows:
                    prow, prhs = pivot_rows[k]
                    f = row[k]
                    for kk, vv in prow.items():
                        nv = row.get(kk, 0) - f * vv
                        if nv == 0:
                            row.pop(kk, None)
                        else:
                            row[kk] = nv
                    rhs -= f * prhs
                    changed = True
                    break
        if not row:
            if rhs != 0:
                return None
            continue
        p = min(row)
        inv = 1 / row[p]
        row = {k: v * inv for k, v in row.items()}
        rhs *= inv
        # keep existing pivot rows reduced in the new pivot column
        for k in order:
            prow, prhs = pivot_rows[k]
            if p in prow:
                f = prow[p]
                for kk, vv in row.items():
                    nv = prow.get(kk, 0) - f * vv
                    if nv == 0:
                        prow.pop(kk, None)
                    else:
                        prow[kk] = nv
                pivot_rows[k] = (prow, prhs - f * rhs)
        pivot_rows[p] = (row, rhs)
        order.append(p)
    sol = [Fraction(0)] * nunknowns
    for p, (row, rhs) in pivot_rows.items():
        # fully reduced: row = e_p + (free columns only)
        sol[p] = rhs
    return sol
