"""State spaces and transition maps of the three chains.

* ``Z`` (balls dropped into bins) lives on n-tuples of nonnegative integers
  and moves by the maps ``U_j``;
* ``X`` (its enrichment) lives on triangular arrays;
* ``Y`` (the n-ball projection) lives on compositions of ``n`` and moves by
  the maps ``T_j``.

Bin configurations and compositions are plain tuples of ints.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import accumulate
from typing import Iterator, List, Sequence, Tuple

from .arrays import TriangularArray

BinConfig = Tuple[int, ...]
Composition = Tuple[int, ...]

MAX_RANKED_N = 20


def check_composition(c: Sequence[int], n: int | None = None) -> Composition:
    c = tuple(int(p) for p in c)
    if not c or any(p < 1 for p in c):
        raise ValueError(f"{c} is not a composition: parts must be positive")
    if n is not None and sum(c) != n:
        raise ValueError(f"{c} is not a composition of {n}")
    return c


def parse_tuple(text: str) -> Tuple[int, ...]:
    """``"2,3"`` -> ``(2, 3)``."""
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ValueError(f"malformed integer list {text!r}") from exc


# -- Z ---------------------------------------------------------------------

def apply_U(c: Sequence[int], j: int) -> BinConfig:
    n = len(c)
    if not 0 <= j <= n:
        raise ValueError(f"U_{j} undefined for {n} bins")
    if j == 0:
        return (0,) + tuple(c[:-1])
    out = list(c)
    out[j - 1] += 1
    return tuple(out)


# -- X ---------------------------------------------------------------------

def apply_X(A: TriangularArray, j: int) -> TriangularArray:
    n = A.size
    if not 0 <= j <= n:
        raise ValueError(f"transition {j} undefined for arrays of size {n}")
    if j == 0:
        if n == 0:
            return A
        rows = [(0,)] + [r + (0,) for r in A.rows[:-1]]
        return TriangularArray(tuple(rows))
    rows = list(A.rows)
    row = list(rows[j - 1])
    row[j - 1] += 1
    rows[j - 1] = tuple(row)
    return TriangularArray(tuple(rows))


def project_p(A: TriangularArray) -> BinConfig:
    return tuple(sum(r) for r in A.rows)


# -- Y ---------------------------------------------------------------------

def apply_T(c: Composition, j: int, n: int | None = None) -> Composition:
    n = sum(c) if n is None else n
    if not 0 <= j <= n - 1:
        raise ValueError(f"T_{j} undefined on compositions of {n}")
    ell = len(c)
    if j >= ell:
        return c
    if j == 0:
        out = (1,) + c[:-1]
    else:
        out = c[:j - 1] + (c[j - 1] + 1,) + c[j:-1]
    if c[-1] > 1:
        out = out + (c[-1] - 1,)
    return out


def compositions(n: int) -> Iterator[Composition]:
    """All compositions of ``n`` in lexicographic order."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


def couple_Z_to_Y(z: Sequence[int]) -> Composition:
    """``g_n(f_n(z))``: add a ball to every bin, keep the leftmost ``n`` balls."""
    n = len(z)
    f = [zi + 1 for zi in z]
    head: List[int] = []
    total = 0
    for part in f:
        if total + part >= n:
            head.append(n - total)
            return tuple(head)
        head.append(part)
        total += part
    raise AssertionError("partial sums of f_n(z) always reach n")


def L(c: Composition) -> Composition:
    return c + (1,)


def R(c: Composition) -> Composition:
    return c[:-1] + (c[-1] + 1,)


def D(c: Composition) -> Composition:
    if sum(c) < 2:
        raise ValueError("D needs a composition of n >= 2")
    if c[-1] >= 2:
        return c[:-1] + (c[-1] - 1,)
    return c[:-1]


@lru_cache(maxsize=None)
def ranked_basis(n: int) -> Tuple[Composition, ...]:
    """Compositions of ``n`` ordered by ``s_{2i-1} = L(s_i)``, ``s_{2i} = R(s_i)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_RANKED_N:
        raise ValueError(f"ranked basis capped at n <= {MAX_RANKED_N}")
    if n == 1:
        return ((1,),)
    out = []
    for s in ranked_basis(n - 1):
        out.append(L(s))
        out.append(R(s))
    return tuple(out)


@lru_cache(maxsize=None)
def rank_index(n: int) -> dict:
    """Composition -> 0-based position in :func:`ranked_basis`."""
    return {c: i for i, c in enumerate(ranked_basis(n))}


def reachability_path(target: Composition) -> List[int]:
    """Transition indices leading from any state to ``target``.

    ``T_0`` then ``c_l - 1`` copies of ``T_1``, then the same for ``c_{l-1}``,
    down to ``c_1``.
    """
    path: List[int] = []
    for part in reversed(target):
        path.append(0)
        path.extend([1] * (part - 1))
    return path


def prefix_sums(c: Sequence[int]) -> List[int]:
    return list(accumulate(c))
