"""Triangular arrays and the weight function ``w_x``.

A triangular array of size ``n`` is ``A = (A[k][j])`` for ``1 <= j <= k <= n``;
here rows are stored 0-indexed so ``A.rows[k-1][j-1]`` is ``A_{k,j}``.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Sequence, Tuple

from .exact import MultiPoly, PolyFraction, parse_rational


@dataclass(frozen=True)
class TriangularArray:
    rows: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(a) for a in r) for r in self.rows)
        for k, r in enumerate(rows, start=1):
            if len(r) != k:
                raise ValueError(f"row {k} has {len(r)} entries, expected {k}")
            if any(a < 0 for a in r):
                raise ValueError("triangular array entries must be nonnegative")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def zeros(cls, n: int) -> "TriangularArray":
        return cls(tuple((0,) * k for k in range(1, n + 1)))

    @classmethod
    def from_json(cls, data) -> "TriangularArray":
        return cls(tuple(tuple(r) for r in data))

    def to_json(self) -> list:
        return [list(r) for r in self.rows]

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, k: int, j: int) -> int:
        """``A_{k,j}`` with 1-based indices."""
        if not 1 <= j <= k <= self.size:
            raise IndexError(f"A_{{{k},{j}}} outside array of size {self.size}")
        return self.rows[k - 1][j - 1]

    def _check(self, i: int):
        if not 1 <= i <= self.size:
            raise IndexError(f"sum index {i} outside 1..{self.size}")

    def row_sum(self, i: int) -> int:
        self._check(i)
        return sum(self.rows[i - 1])

    def col_sum(self, i: int) -> int:
        self._check(i)
        return sum(self.rows[k - 1][i - 1] for k in range(i, self.size + 1))

    def diagonal(self, i: int) -> Tuple[int, ...]:
        """Entries ``A_{n-i+j, j}`` for ``j = 1..i``."""
        self._check(i)
        n = self.size
        return tuple(self.rows[n - i + j - 1][j - 1] for j in range(1, i + 1))

    def diag_sum(self, i: int) -> int:
        return sum(self.diagonal(i))

    def render(self) -> str:
        return "\n".join(" ".join(str(a) for a in r) for r in self.rows)

    def __str__(self):
        return "[" + "; ".join(" ".join(map(str, r)) for r in self.rows) + "]"


EMPTY = TriangularArray(())


@dataclass(frozen=True)
class RateVector:
    """Rates ``x_0..x_m`` with prefix sums ``y_k``.

    Construction enforces ``x_0 > 0`` and nonnegativity; the standing
    assumption ``x_1 > 0`` is checked separately by :meth:`require_standing`
    because some degenerate evaluations are meaningful without it.
    """

    rates: Tuple[Fraction, ...]

    def __post_init__(self):
        rates = tuple(parse_rational(r) for r in self.rates)
        if not rates:
            raise ValueError("at least x_0 is required")
        if any(r < 0 for r in rates):
            raise ValueError("rates must be nonnegative")
        if rates[0] <= 0:
            raise ValueError("x_0 must be positive")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def parse(cls, text: str) -> "RateVector":
        return cls(tuple(t for t in text.split(",")))

    def __len__(self):
        return len(self.rates)

    def __getitem__(self, i):
        return self.rates[i]

    def __iter__(self):
        return iter(self.rates)

    def y(self, k: int) -> Fraction:
        return sum(self.rates[: k + 1], Fraction(0))

    def prefix_sums(self) -> Tuple[Fraction, ...]:
        return tuple(itertools.accumulate(self.rates))

    def require(self, count: int) -> "RateVector":
        if len(self.rates) < count:
            raise ValueError(f"need rates x_0..x_{count - 1}, got {len(self.rates)}")
        return self

    def require_standing(self) -> "RateVector":
        if len(self.rates) < 2 or self.rates[1] <= 0:
            raise ValueError("x_1 must be positive")
        return self

    def require_positive(self, count: int) -> "RateVector":
        self.require(count)
        if any(r <= 0 for r in self.rates[:count]):
            raise ValueError(f"rates x_0..x_{count - 1} must all be positive")
        return self

    @cached_property
    def integer_rates(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Rates and prefix sums scaled by the lcm of the denominators.

        ``w_x`` is homogeneous of degree 0, so integer rates give the same weights.
        """
        scale = math.lcm(*(r.denominator for r in self.rates))
        xs = tuple(int(r * scale) for r in self.rates)
        return xs, tuple(itertools.accumulate(xs))

    def scaled(self, s) -> "RateVector":
        return RateVector(tuple(r * s for r in self.rates))


def as_rates(x) -> RateVector:
    return x if isinstance(x, RateVector) else RateVector(tuple(x))


def multinomial(parts: Sequence[int]) -> int:
    """``(sum parts)! / prod(parts_i!)``, built from binomials to stay integral."""
    total, out = 0, 1
    for p in parts:
        if p < 0:
            raise ValueError("multinomial parts must be nonnegative")
        total += p
        out *= math.comb(total, p)
    return out


def _weight_factors(A: TriangularArray):
    """Yield ``(k, multinomial_k, v_k, d_k)`` for ``k = 1..n``."""
    for k in range(1, A.size + 1):
        diag = A.diagonal(k)
        yield k, multinomial(diag), A.col_sum(k), sum(diag)


def _weight_parts(rows, xs) -> Tuple[int, Tuple[int, ...]]:
    """Integer numerator and diagonal sums ``(d_1..d_n)`` of ``w_x``."""
    n = len(rows)
    num = xs[0] ** n
    ds = []
    for k in range(1, n + 1):
        total, mult, v = 0, 1, 0
        for j in range(1, k + 1):
            a = rows[n - k + j - 1][j - 1]
            total += a
            mult *= math.comb(total, a)
        for r in range(k - 1, n):
            v += rows[r][k - 1]
        num *= mult * xs[k] ** v
        ds.append(total)
    return num, tuple(ds)


def weight(A: TriangularArray, x) -> Fraction:
    """Exact ``w_x(A)``; rates beyond ``x_n`` are ignored."""
    n = A.size
    if n == 0:
        return Fraction(1)
    xs, ys = as_rates(x).require(n + 1).integer_rates
    num, ds = _weight_parts(A.rows, xs)
    return Fraction(num, math.prod(ys[k] ** (d + 1) for k, d in enumerate(ds, start=1)))


def weight_sum(arrays, x) -> Fraction:
    """Exact sum of ``w_x`` over same-size arrays, grouping terms by denominator."""
    x = as_rates(x)
    groups = defaultdict(int)
    size = None
    for A in arrays:
        if size is None:
            size = A.size
            if size == 0:
                return Fraction(1)
            xs, ys = x.require(size + 1).integer_rates
        num, ds = _weight_parts(A.rows, xs)
        groups[ds] += num
    total = Fraction(0)
    for ds, num in groups.items():
        total += Fraction(num, math.prod(ys[k] ** (d + 1) for k, d in enumerate(ds, start=1)))
    return total


def weight_factorwise(A: TriangularArray, x) -> Fraction:
    """Same value as :func:`weight`, accumulated one factor at a time."""
    n = A.size
    x = as_rates(x).require(n + 1)
    out = Fraction(x[0]) ** n
    for k, mult, v, d in _weight_factors(A):
        out *= mult
        out *= x[k] ** v
        out /= x.y(k) ** (d + 1)
    return out


def weight_symbolic(A: TriangularArray, nvars: int | None = None) -> PolyFraction:
    """``w_x(A)`` as a monomial over a product of powers of ``y_k``."""
    n = A.size
    nvars = n + 1 if nvars is None else nvars
    if nvars < n + 1:
        raise ValueError(f"array of size {n} needs x_0..x_{n}")
    exps = [0] * nvars
    exps[0] = n
    coeff = 1
    ypow = []
    for k, mult, v, d in _weight_factors(A):
        coeff *= mult
        exps[k] += v
        ypow.append(d + 1)
    return PolyFraction(MultiPoly.monomial(exps, coeff), ypow)


def weak_compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Weak compositions of ``total`` into ``parts`` parts, colexicographic order."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in weak_compositions(total - last, parts - 1):
            yield head + (last,)


def count_row_sums(c: Sequence[int]) -> int:
    return math.prod(math.comb(ci + i - 1, i - 1) for i, ci in enumerate(c, start=1))


def enumerate_row_sums(c: Sequence[int], cap: int | None = None) -> Iterator[TriangularArray]:
    """All arrays of size ``len(c)`` whose ``i``-th row sums to ``c[i-1]``.

    Row 1 varies slowest.  ``cap`` bounds the number of arrays the caller is
    willing to receive; exceeding it raises before anything is produced.
    """
    c = list(c)
    if any(ci < 0 for ci in c):
        raise ValueError("row sums must be nonnegative")
    if cap is not None and count_row_sums(c) > cap:
        raise ValueError(f"{count_row_sums(c)} arrays exceed enumeration cap {cap}")
    row_choices = [list(weak_compositions(ci, i)) for i, ci in enumerate(c, start=1)]
    for rows in itertools.product(*row_choices):
        yield TriangularArray(rows)


def all_arrays_with_total(n: int, total: int) -> Iterator[TriangularArray]:
    """Every array of size ``n`` whose entries sum to ``total``."""
    cells = n * (n + 1) // 2
    for flat in weak_compositions(total, cells):
        rows, pos = [], 0
        for k in range(1, n + 1):
            rows.append(flat[pos:pos + k])
            pos += k
        yield TriangularArray(tuple(rows))
