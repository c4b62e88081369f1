"""Exact stationary distributions of the Z, X and Y chains.

Every formula has a numeric mode (rates are Fractions, results are
Fractions) and a symbolic mode (results are :class:`PolyFraction` in the
rate variables).  Symbolic mode is capped at ``SYMBOLIC_MAX_N``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Sequence

from .arrays import (
    TriangularArray,
    _weight_parts,
    as_rates,
    all_arrays_with_total,
    enumerate_row_sums,
    multinomial,
    weight,
    weight_sum,
    weight_symbolic,
)
from .chains import check_composition, compositions, ranked_basis
from .exact import MultiPoly, PolyFraction, y_product
from .linalg import nullspace
from .report import Report

SYMBOLIC_MAX_N = 6
DEFAULT_ENUM_CAP = 5_000_000


def _sum_weights(row_sums, x, symbolic: bool, nvars: int):
    if symbolic:
        total = PolyFraction.const(nvars, 0)
        for A in enumerate_row_sums(row_sums, cap=DEFAULT_ENUM_CAP):
            total = total + weight_symbolic(A, nvars)
        return total
    return weight_sum(enumerate_row_sums(row_sums, cap=DEFAULT_ENUM_CAP), x)


def _check_symbolic(n: int):
    if n > SYMBOLIC_MAX_N:
        raise ValueError(f"symbolic mode capped at n <= {SYMBOLIC_MAX_N}")


def pi_Z_prefix(c: Sequence[int], x=None, n: int | None = None, symbolic: bool = False,
                nvars: int | None = None):
    """Stationary probability that bins ``1..l`` of ``Z`` hold ``c_1..c_l`` balls."""
    c = tuple(c)
    ell = len(c)
    if ell < 1 or any(ci < 0 for ci in c):
        raise ValueError("need at least one nonnegative bin count")
    if n is not None and ell > n:
        raise ValueError(f"prefix of length {ell} longer than n={n}")
    if symbolic:
        nvars = nvars or (n if n is not None else ell) + 1
        _check_symbolic(ell)
        return _sum_weights(c, None, True, nvars)
    x = as_rates(x).require(ell + 1)
    return _sum_weights(c, x, False, 0)


def pi_X(A: TriangularArray, x=None, symbolic: bool = False, nvars: int | None = None):
    """Stationary probability of ``A`` under the enriched chain (all rates > 0)."""
    if symbolic:
        return weight_symbolic(A, nvars)
    x = as_rates(x).require_positive(A.size + 1)
    return weight(A, x)


def pi_Y_finite(c: Sequence[int], x=None, symbolic: bool = False, nvars: int | None = None):
    """Stationary probability of composition ``c`` from the finite formula.

    With ``g_i = c_i - 1``: the mass of arrays of size ``l-1`` with row sums
    ``g_1..g_{l-1}`` minus the mass of size-``l`` arrays whose last row sum
    ``s`` is below ``g_l``.
    """
    c = check_composition(c)
    n = sum(c)
    gamma = [p - 1 for p in c]
    head, last = gamma[:-1], gamma[-1]
    if symbolic:
        _check_symbolic(n)
        nvars = nvars or n
        total = _sum_weights(head, None, True, nvars)
        for s in range(last):
            total = total - _sum_weights(head + [s], None, True, nvars)
        return total
    x = as_rates(x).require(n)
    total = _sum_weights(head, x, False, 0)
    for s in range(last):
        total -= _sum_weights(head + [s], x, False, 0)
    return total


def pi_Y_all(n: int, x=None, symbolic: bool = False) -> Dict[tuple, object]:
    """``{c: pi_Y(c)}`` over compositions of ``n`` in ranked order."""
    return {c: pi_Y_finite(c, x, symbolic=symbolic) for c in ranked_basis(n)}


class _ProductSeries:
    """Coefficients of ``prod_i sum_a C(D_i + a, a) (p_i / q_i)**a t**a``.

    The product equals ``1 / prod_i (1 - r_i t)**(D_i + 1)``, so its
    coefficients obey a linear recurrence whose order is ``sum (D_i + 1)``.
    ``next`` returns the integer ``K_s``; the coefficient is ``K_s / P**s``
    with ``P = prod q_i``.
    """

    def __init__(self, ds: Sequence[int], nums: Sequence[int], dens: Sequence[int]):
        self.P = math.prod(dens)
        # integer coefficients of prod (1 - rho_i T)**(D_i + 1) with T = t / P
        poly = [1]
        for D, p, q in zip(ds, nums, dens):
            rho = p * self.P // q
            for _ in range(D + 1):
                poly = [a - rho * b for a, b in zip(poly + [0], [0] + poly)]
        self.recurrence = poly[1:]
        self.history: list = []

    def next(self) -> int:
        s = len(self.history)
        value = 1 if s == 0 else -sum(q * self.history[s - 1 - k]
                                      for k, q in enumerate(self.recurrence[:s]))
        self.history.append(value)
        return value


class _PartialSum:
    """``sum_{k<=s} K_k / P**k`` held as the integer numerator over ``P**s``."""

    def __init__(self, P: int):
        self.P = P
        self.num = 0
        self.terms = 0

    def add(self, K: int) -> None:
        self.num = self.num * self.P + K if self.terms else K
        self.terms += 1

    @property
    def den(self) -> int:
        return self.P ** (self.terms - 1)


class _GeometricSumTail:
    """``P(G_1 + ... + G_l > s)`` for independent geometrics with ``P(G=m) = (1-r) r**m``."""

    def __init__(self, ratios: Sequence[Fraction]):
        ratios = [Fraction(r) for r in ratios]
        self.scale = math.prod((1 - r for r in ratios), start=Fraction(1))
        self.series = _ProductSeries([0] * len(ratios), [r.numerator for r in ratios],
                                     [r.denominator for r in ratios])
        self.mass = _PartialSum(self.series.P)

    def _extend(self, s: int) -> None:
        while self.mass.terms <= s:
            self.mass.add(self.series.next())

    def tail_after(self, s: int) -> Fraction:
        self._extend(s)
        return 1 - self.scale * Fraction(self.mass.num, self.mass.den)

    def tail_at_most(self, s: int, tolerance: Fraction) -> bool:
        """Integer-only test of ``tail_after(s) <= tolerance``."""
        self._extend(s)
        a, b = self.scale.numerator, self.scale.denominator
        den = self.mass.den
        # 1 - a M / (b den) <= t  <=>  (1 - t) b den <= a M
        t = Fraction(tolerance)
        return (t.denominator - t.numerator) * b * den <= t.denominator * a * self.mass.num


@dataclass
class SeriesResult:
    value: Fraction
    tail_bound: Fraction
    terms: int
    converged: bool
    status: str = "certified"

    def to_json(self) -> dict:
        from .exact import format_rational
        return {"value": format_rational(self.value), "tail_bound": format_rational(self.tail_bound),
                "terms": self.terms, "converged": self.converged, "status": self.status}


def _bin_tail(ell: int, x) -> _GeometricSumTail:
    """Tail of ``Z_l`` at stationarity.

    Bin ``l`` collects one independent geometric count per epoch it has lived
    through; epoch ``i`` contributes ball arrivals at rate ``x_j`` during an
    Exp(``x_0``) time, i.e. a geometric with ratio ``x_j / (x_0 + x_j)``.
    """
    return _GeometricSumTail([x[j] / (x[0] + x[j]) for j in range(1, ell + 1)])


def _bin_tail_bound(ell: int, x, upto: int) -> Fraction:
    """``P(Z_l > upto)`` at stationarity."""
    return _bin_tail(ell, as_rates(x)).tail_after(upto)


class _LastRowSums:
    """Sums of ``w_x`` over size-``l`` arrays with fixed head rows, by last-row total ``s``.

    For fixed head rows the last-row entry ``a_j`` sits on diagonal ``j``,
    adding a factor ``C(D_j + a_j, a_j) (x_j / y_j)**a_j`` to the weight of
    the array with an empty last row.  Summing over ``a`` with ``sum a = s``
    is a coefficient of a product of series, grouped by diagonal sums ``D``.
    """

    def __init__(self, head: Sequence[int], x):
        ell = len(head) + 1
        xs, ys = x.require(ell + 1).integer_rates
        groups: Dict[tuple, int] = {}
        for A in enumerate_row_sums(list(head) + [0], cap=DEFAULT_ENUM_CAP):
            num, ds = _weight_parts(A.rows, xs)
            groups[ds] = groups.get(ds, 0) + num
        bases = {ds: Fraction(num, math.prod(ys[k] ** (d + 1) for k, d in enumerate(ds, start=1)))
                 for ds, num in groups.items()}
        # put every base over one denominator so each level is a single integer
        self.scale = Fraction(1, math.lcm(*(b.denominator for b in bases.values())))
        self.parts = [(b.numerator * (self.scale.denominator // b.denominator),
                       _ProductSeries(ds, xs[1:ell + 1], ys[1:ell + 1]))
                      for ds, b in sorted(bases.items())]
        self.P = self.parts[0][1].P

    def next(self) -> int:
        return sum(B * series.next() for B, series in self.parts)


def pi_Y_series(c: Sequence[int], x, tolerance=Fraction(1, 10 ** 9), max_s: int = 400,
                step: int = 1) -> SeriesResult:
    """Positive-series form of ``pi_Y(c)`` truncated once the tail is certified small.

    Terms are indexed by the last-row sum ``s >= c_l - 1``; the tail after
    ``N`` is bounded by ``P(Z_l > N)``.  The bound is checked every ``step``
    terms.
    """
    c = check_composition(c)
    n = sum(c)
    x = as_rates(x).require(n)
    tolerance = Fraction(tolerance)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    gamma = [p - 1 for p in c]
    head, last = gamma[:-1], gamma[-1]
    ell = len(c)
    x_ext = x
    if len(x) < ell + 1:
        # only c = (1,...,1) reaches size-n arrays; summing out the last row
        # removes x_n, so any positive placeholder gives the same limit
        x_ext = as_rates(tuple(x) + (Fraction(1),) * (ell + 1 - len(x)))
    levels = _LastRowSums(head, x_ext)
    tail = _bin_tail(ell, x_ext)
    for _ in range(last):
        levels.next()
    total = _PartialSum(levels.P)
    s = last
    while True:
        total.add(levels.next())
        done = (s - last) % step == 0 and tail.tail_at_most(s, tolerance)
        if done or s >= max_s:
            # terms start at P**last, so rescale the running sum
            value = levels.scale * Fraction(total.num, total.den * levels.P ** last)
            return SeriesResult(value, tail.tail_after(s), total.terms, done,
                                "certified" if done else "cap-exceeded")
        s += 1


# -- consequences of the product formula -----------------------------------

@dataclass(frozen=True)
class YPowerProduct:
    """``prod_k y_k**exponents[k-1]`` kept in factored form."""

    exponents: tuple

    def expand(self, nvars: int) -> MultiPoly:
        return y_product(nvars, self.exponents)

    def evaluate(self, x) -> Fraction:
        x = as_rates(x)
        out = Fraction(1)
        for k, e in enumerate(self.exponents, start=1):
            out *= x.y(k) ** e
        return out

    def __str__(self):
        parts = [f"y_{k}" + (f"^{e}" if e > 1 else "")
                 for k, e in enumerate(self.exponents, start=1) if e]
        return "*".join(parts) or "1"


def partition_function(n: int) -> YPowerProduct:
    """``prod_{k=1}^{n-1} y_k**(n-k)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return YPowerProduct(tuple(n - k for k in range(1, n)))


def denominator_exponents(c: Sequence[int]) -> tuple:
    """Largest power of each ``y_k`` over the individual terms of the finite formula."""
    c = check_composition(c)
    gamma = [p - 1 for p in c]
    head, last = gamma[:-1], gamma[-1]
    best = [0] * len(c)
    groups = [head] + [head + [s] for s in range(last)]
    for rs in groups:
        for A in enumerate_row_sums(rs):
            for k in range(1, A.size + 1):
                best[k - 1] = max(best[k - 1], A.diag_sum(k) + 1)
    return tuple(best)


def predicted_denominator_exponents(c: Sequence[int]) -> tuple:
    """Closed form for :func:`denominator_exponents` (k < l and k = l cases)."""
    c = check_composition(c)
    n, ell = sum(c), len(c)
    g = [None] + [p - 1 for p in c]
    out = []
    for k in range(1, ell):
        out.append(max(g[ell - k] + 1, g[ell]) + sum(g[ell - j] for j in range(1, k)))
    out.append(0 if g[ell] == 0 else n - ell)
    return tuple(out)


def partition_divisibility(n: int) -> Report:
    """Every ``pi_Y(c)`` clears to a polynomial when multiplied by the partition function."""
    Z = partition_function(n).exponents
    for c in compositions(n):
        frac = pi_Y_finite(c, symbolic=True)
        ex = list(frac.ypow) + [0] * (len(Z) + 1)
        for k, e in enumerate(ex, start=1):
            bound = Z[k - 1] if k <= len(Z) else 0
            if e > bound:
                return Report("partition", False, {"n": n},
                              {"composition": c, "k": k, "exponent": e, "bound": bound})
        cleared = frac.num * y_product(n, [z - (frac.ypow[i] if i < len(frac.ypow) else 0)
                                           for i, z in enumerate(Z)])
        if cleared * frac.den != frac.num * y_product(n, Z):
            return Report("partition", False, {"n": n}, {"composition": c, "stage": "clearing"})
    # the bound is attained: c_{k+1}(n-k) has a monomial numerator and y_k^(n-k) below
    attained = {}
    for k in range(1, n):
        c = (n - k,) + (1,) * k
        mono = monomial_special(1, {"alpha": n - k, "ell": k + 1}, nvars=n)
        if pi_Y_finite(c, symbolic=True) != mono:
            return Report("partition", False, {"n": n}, {"composition": c, "stage": "lcm"})
        attained[k] = mono.ypow[k - 1] if k - 1 < len(mono.ypow) else 0
    ok = all(attained[k] == n - k for k in attained)
    return Report("partition", ok, {"n": n, "exponents": Z, "attained": attained})


def leftmost_bin_marginal(j: int, n: int, x=None, symbolic: bool = False):
    """Stationary probability that the first bin of ``Y`` holds ``j`` balls."""
    if not 1 <= j <= n:
        raise ValueError("need 1 <= j <= n")
    if symbolic:
        nv = max(n, 2)
        if j < n:
            return PolyFraction(MultiPoly.monomial([1, j - 1] + [0] * (nv - 2)), [j])
        return PolyFraction(MultiPoly.monomial([0, n - 1] + [0] * (nv - 2)), [n - 1])
    x = as_rates(x).require(2)
    y1 = x[0] + x[1]
    if j < n:
        return x[0] * x[1] ** (j - 1) / y1 ** j
    return (x[1] / y1) ** (n - 1)


def monomial_special(case: int, params: dict, x=None, nvars: int | None = None):
    """The two single-monomial stationary probabilities.

    ``case=1``: ``params = {"alpha", "ell"}``, the composition
    ``(alpha, 1, ..., 1)`` of length ``ell``.
    ``case=2``: ``params = {"n", "ell"}``, any composition of length ``ell``
    when ``x_2 = ... = x_{n-1} = 0``.
    """
    if case == 1:
        alpha, ell = params["alpha"], params["ell"]
        if alpha < 1 or ell < 2:
            raise ValueError("case 1 needs alpha >= 1 and ell >= 2")
        nv = nvars or alpha + ell - 1
        exps = [0] * nv
        exps[0], exps[1] = ell - 1, alpha - 1
        ypow = [1] * (ell - 2) + [alpha]
        frac = PolyFraction(MultiPoly.monomial(exps), ypow)
    elif case == 2:
        n, ell = params["n"], params["ell"]
        nv = nvars or max(n, 2)
        exps = [0] * nv
        exps[0], exps[1] = ell - 1, n - ell
        frac = PolyFraction(MultiPoly.monomial(exps), [n - 1])
    else:
        raise ValueError(f"unknown case {case}")
    return frac.evaluate(list(as_rates(x))) if x is not None else frac


# -- the generalised binomial identity ---------------------------------------

def diagonal_identity_rhs(deltas: Sequence[int], x) -> Fraction:
    """Closed form of the box sum over ``alpha in Z_{>=0}^n``, ``n = len(deltas) + 1``."""
    n = len(deltas) + 1
    x = as_rates(x).require_positive(n + 1)
    ys = x.prefix_sums()
    if n == 1:
        return ys[1] / x[0]
    out = Fraction(ys[n]) ** (deltas[-1] + 1) / (x[0] * Fraction(ys[1]) ** deltas[0])
    for k in range(2, n):
        out *= Fraction(ys[k]) ** (deltas[k - 2] - deltas[k - 1])
    return out


def diagonal_identity_lhs_truncated(deltas: Sequence[int], x, cap: int) -> Fraction:
    """Sum of the identity's summand over the box ``[0, cap]^n`` (a lower bound)."""
    n = len(deltas) + 1
    x = as_rates(x).require_positive(n + 1)
    ys = x.prefix_sums()
    shifted = [0] + list(deltas)
    factors = []
    for k in range(1, n + 1):
        r = Fraction(x[k]) / ys[k]
        factors.append([math.comb(shifted[k - 1] + a, a) * r ** a for a in range(cap + 1)])
    total = Fraction(0)
    stack = [(0, Fraction(1))]
    # explicit box enumeration, not the product of 1-d sums
    while stack:
        depth, acc = stack.pop()
        if depth == n:
            total += acc
            continue
        for term in factors[depth]:
            stack.append((depth + 1, acc * term))
    return total


def diagonal_identity_check(deltas: Sequence[int], x, tolerance=Fraction(1, 10 ** 9),
                             start: int = 8, max_cap: int = 256) -> Report:
    rhs = diagonal_identity_rhs(deltas, x)
    cap = start
    prev = None
    while cap <= max_cap:
        lhs = diagonal_identity_lhs_truncated(deltas, x, cap)
        gap = rhs - lhs
        if gap < 0 or (prev is not None and lhs < prev):
            return Report("identity", False, {"deltas": list(deltas), "cap": cap},
                          {"lhs": lhs, "rhs": rhs})
        if gap < tolerance:
            return Report("identity", True, {"deltas": list(deltas), "cap": cap,
                                             "gap": float(gap), "rhs": rhs})
        prev = lhs
        cap = int(cap * 1.5) + 1
    return Report("identity", False, {"deltas": list(deltas), "cap": max_cap},
                  {"reason": "cap exceeded", "gap": float(rhs - lhs)})


# -- master equations ---------------------------------------------------------

def verify_master_Y(n: int, x, oracle: bool = True, cap: int = 10) -> Report:
    """``pi_Y`` is annihilated by ``M_n``, sums to one, and matches the null space."""
    from .spectral import build_generator

    if n > cap:
        raise ValueError(f"master-equation check capped at n <= {cap}")
    x = as_rates(x).require(n)
    M = build_generator(n, x)
    pi = pi_Y_all(n, x)
    vec = {i: pi[c] for i, c in enumerate(M.basis)}
    if sum(vec.values()) != 1:
        return Report("master-y", False, {"n": n}, {"sum": sum(vec.values())})
    residual = M.apply(vec)
    if residual:
        i = min(residual)
        return Report("master-y", False, {"n": n},
                      {"state": M.basis[i], "residual": residual[i]})
    details = {"n": n, "states": M.size}
    if oracle:
        kernel = nullspace(M.to_dense())
        if len(kernel) != 1:
            return Report("master-y", False, details, {"kernel_dimension": len(kernel)})
        v = kernel[0]
        s = sum(v)
        v = [a / s for a in v]
        for i, c in enumerate(M.basis):
            if v[i] != pi[c]:
                return Report("master-y", False, details,
                              {"state": c, "formula": pi[c], "null_vector": v[i]})
        details["oracle"] = "nullspace"
    return Report("master-y", True, details)


def _drop_top_diagonal(A: TriangularArray) -> TriangularArray:
    """Rows 2..n with their last entry (a top-diagonal zero) removed."""
    return TriangularArray(tuple(r[:-1] for r in A.rows[1:]))


def incoming_shift_mass(A: TriangularArray, x) -> Fraction:
    """Total weight of the arrays that shift into ``A`` (closed form via the identity)."""
    n = A.size
    x = as_rates(x).require_positive(n + 1)
    ys = x.prefix_sums()
    Ap = _drop_top_diagonal(A)
    if n == 1:
        return x[0] / ys[1] * diagonal_identity_rhs([], x)
    out = Fraction(x[0]) ** n / math.prod(ys[1:n + 1])
    for k in range(1, n):
        diag = Ap.diagonal(k)
        out *= multinomial(diag) * Fraction(x[k]) ** Ap.col_sum(k) / Fraction(ys[k + 1]) ** sum(diag)
    deltas = [Ap.diag_sum(k) for k in range(1, n)]
    return out * diagonal_identity_rhs(deltas, x)


def incoming_shift_mass_truncated(A: TriangularArray, x, cap: int) -> Fraction:
    """Direct sum of ``w_x`` over shift predecessors whose free bottom row is in ``[0, cap]^n``."""
    n = A.size
    x = as_rates(x).require_positive(n + 1)
    Ap = _drop_top_diagonal(A)
    total = Fraction(0)
    for total_balls in range(cap * n + 1):
        for row in _bounded_rows(total_balls, n, cap):
            total += weight(TriangularArray(Ap.rows + (row,)), x)
    return total


def _bounded_rows(total: int, parts: int, cap: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, cap) + 1):
        for rest in _bounded_rows(total - first, parts - 1, cap):
            yield (first,) + rest


def verify_master_X(A: TriangularArray, x) -> Report:
    """Exact balance of inflow and outflow at ``A`` for the enriched chain."""
    n = A.size
    x = as_rates(x).require_positive(n + 1)
    ys = x.prefix_sums()
    wA = weight(A, x)
    outflow = ys[n] * wA
    dn = A.diag_sum(n)
    if dn > 0:
        inflow = Fraction(0)
        for i in range(1, n + 1):
            a = A.entry(i, i)
            if a == 0:
                continue
            rows = [list(r) for r in A.rows]
            rows[i - 1][i - 1] -= 1
            Ai = TriangularArray(tuple(tuple(r) for r in rows))
            term = x[i] * weight(Ai, x)
            if term != ys[n] * wA * Fraction(a, dn):
                return Report("master-x", False, {"case": "II", "array": A.to_json()},
                              {"i": i, "lhs": term, "rhs": ys[n] * wA * Fraction(a, dn)})
            inflow += term
        case = "II"
    else:
        Ap = _drop_top_diagonal(A)
        mass = incoming_shift_mass(A, x)
        if mass != weight(Ap, x):
            return Report("master-x", False, {"case": "I", "array": A.to_json()},
                          {"shift_mass": mass, "w_reduced": weight(Ap, x)})
        if wA != weight(Ap, x) * x[0] / ys[n]:
            return Report("master-x", False, {"case": "I", "array": A.to_json()},
                          {"w": wA, "w_reduced_scaled": weight(Ap, x) * x[0] / ys[n]})
        inflow = x[0] * mass
        case = "I"
    ok = inflow == outflow
    return Report("master-x", ok, {"case": case, "array": A.to_json(),
                                   "inflow": inflow, "outflow": outflow},
                  None if ok else {"inflow": inflow, "outflow": outflow})


def normalization_check(n: int, x, tolerance=Fraction(1, 10 ** 9), cap: int = 200) -> Report:
    """Partial sums of ``w_x`` over all size-``n`` arrays by total ball count."""
    x = as_rates(x).require(n + 1)
    tolerance = Fraction(tolerance)
    total = Fraction(0)
    for N in range(cap + 1):
        total += weight_sum(all_arrays_with_total(n, N), x)
        deficit = 1 - total
        if deficit < 0:
            return Report("normalization", False, {"n": n, "N": N}, {"partial_sum": total})
        if deficit < tolerance:
            return Report("normalization", True,
                          {"n": n, "N": N, "deficit": float(deficit), "partial_sum": total})
    return Report("normalization", False, {"n": n, "N": cap},
                  {"reason": "cap exceeded", "deficit": float(1 - total)})
