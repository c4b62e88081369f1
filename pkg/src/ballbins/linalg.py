"""Small exact linear-algebra kernels over Fractions (and Bareiss over rings)."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Sequence

SparseRow = Dict[int, Fraction]


def _sparse_rows(matrix: Sequence[Sequence]) -> List[SparseRow]:
    return [{j: Fraction(v) for j, v in enumerate(row) if v} for row in matrix]


def rref(matrix: Sequence[Sequence]) -> tuple[List[SparseRow], List[int]]:
    """Reduced row echelon form of a dense matrix; returns (pivot rows, pivot columns)."""
    rows = [r for r in _sparse_rows(matrix) if r]
    pivots: List[SparseRow] = []
    pivot_cols: List[int] = []
    for row in rows:
        for prow, pc in zip(pivots, pivot_cols):
            f = row.get(pc)
            if f:
                for j, v in prow.items():
                    nv = row.get(j, 0) - f * v
                    if nv:
                        row[j] = nv
                    else:
                        row.pop(j, None)
        if not row:
            continue
        pc = min(row)
        inv = 1 / row[pc]
        row = {j: v * inv for j, v in row.items()}
        for prow in pivots:
            f = prow.get(pc)
            if f:
                for j, v in row.items():
                    nv = prow.get(j, 0) - f * v
                    if nv:
                        prow[j] = nv
                    else:
                        prow.pop(j, None)
        pivots.append(row)
        pivot_cols.append(pc)
    return pivots, pivot_cols


def rank(matrix: Sequence[Sequence]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> List[List[Fraction]]:
    """Basis of ``{v : matrix @ v = 0}`` with Fraction entries."""
    ncols = len(matrix[0]) if ncols is None else ncols
    pivots, pivot_cols = rref(matrix)
    free = [j for j in range(ncols) if j not in set(pivot_cols)]
    basis = []
    for fj in free:
        v = [Fraction(0)] * ncols
        v[fj] = Fraction(1)
        for prow, pc in zip(pivots, pivot_cols):
            v[pc] = -prow.get(fj, 0)
        basis.append(v)
    return basis


def matvec(matrix: Sequence[Sequence], v: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, v) if a and b), Fraction(0)) for row in matrix]


def identity(n: int, one=Fraction(1), zero=Fraction(0)) -> list:
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def det_bareiss(matrix: Sequence[Sequence], exact_div: Callable = None, one=1):
    """Fraction-free determinant.

    Works over any commutative ring whose elements support ``+ - *``, truth
    testing for zero, and an exact division ``exact_div(a, b)``.
    """
    if exact_div is None:
        exact_div = lambda a, b: a // b if isinstance(a, int) and isinstance(b, int) else a / b
    m = [list(r) for r in matrix]
    n = len(m)
    if n == 0:
        return one
    sign = 1
    prev = one
    for k in range(n - 1):
        if not m[k][k]:
            for r in range(k + 1, n):
                if m[r][k]:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return m[k][k] * 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = exact_div(m[i][j] * pivot - m[i][k] * m[k][j], prev)
            m[i][k] = m[i][k] * 0
        prev = pivot
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det
