"""Generator matrices of the n-ball projection and their spectrum.

Matrices follow the column convention: column ``c`` holds the rates out of
state ``c``, so every column sums to zero.  Self-loops (``T_j(c) == c``)
contribute nothing to the generator.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence

from .arrays import as_rates
from .chains import apply_T, rank_index, ranked_basis
from .exact import MultiPoly, UniPoly, format_rational, variables
from .linalg import det_bareiss, rank
from .report import Report

MAX_GENERATOR_N = 14


@dataclass
class GeneratorMatrix:
    """Sparse column storage of ``M_n`` in the ranked basis."""

    n: int
    basis: tuple
    cols: List[Dict[int, object]]
    zero: object = Fraction(0)

    @property
    def size(self) -> int:
        return len(self.basis)

    def entry(self, i: int, j: int):
        return self.cols[j].get(i, self.zero)

    def to_dense(self) -> list:
        return [[self.entry(i, j) for j in range(self.size)] for i in range(self.size)]

    def apply(self, vec: Dict[int, object]) -> Dict[int, object]:
        """``M @ v`` for a sparse vector ``{index: value}``."""
        out: Dict[int, object] = {}
        for j, a in vec.items():
            if not a:
                continue
            for i, m in self.cols[j].items():
                v = out.get(i, self.zero) + m * a
                if v:
                    out[i] = v
                else:
                    out.pop(i, None)
        return out

    def to_csv(self) -> str:
        lines = [",".join(["state"] + ["-".join(map(str, c)) for c in self.basis])]
        for i, c in enumerate(self.basis):
            cells = [_cell(self.entry(i, j)) for j in range(self.size)]
            lines.append(",".join(["-".join(map(str, c))] + cells))
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return format_rational(v)
    return f'"{v!r}"'


def symbolic_rates(n: int) -> List[MultiPoly]:
    """``[x_0, ..., x_{n-1}]`` as polynomials in ``n`` variables."""
    return variables(n)


def _rate_list(n: int, x) -> list:
    if x is None or x == "symbolic":
        return symbolic_rates(n)
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], MultiPoly):
        return list(x)
    return list(as_rates(x).require(n).rates[:n])


def build_generator(n: int, x=None) -> GeneratorMatrix:
    """``M_n`` for numeric rates, or symbolic when ``x`` is None."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_GENERATOR_N:
        raise ValueError(f"generator capped at n <= {MAX_GENERATOR_N}")
    rates = _rate_list(n, x)
    zero = rates[0] * 0
    basis = ranked_basis(n)
    index = rank_index(n)
    cols = []
    for c in basis:
        col: Dict[int, object] = {}
        i = index[c]
        for j in range(n):
            target = apply_T(c, j, n)
            if target == c:
                continue
            t = index[target]
            col[t] = col.get(t, zero) + rates[j]
            col[i] = col.get(i, zero) - rates[j]
        cols.append({k: v for k, v in col.items() if v})
    return GeneratorMatrix(n, basis, cols, zero)


# -- the f/g basis -------------------------------------------------------------

def f_vector(n: int, i: int) -> Dict[int, int]:
    """``f_i = e(s_{2i}) - e(s_{2i-1})`` for 1-based ``i``."""
    return {2 * i - 1: 1, 2 * i - 2: -1}


def g_vector(n: int, i: int) -> Dict[int, int]:
    return {2 * i - 2: 1, 2 * i - 1: 1}


def change_of_basis_matrix(n: int) -> List[List[int]]:
    """Columns are ``f_1..f_m, g_1..g_m`` written in the ranked basis."""
    size = 2 ** (n - 1)
    m = size // 2
    P = [[0] * size for _ in range(size)]
    for i in range(1, m + 1):
        for r, v in f_vector(n, i).items():
            P[r][i - 1] = v
        for r, v in g_vector(n, i).items():
            P[r][m + i - 1] = v
    return P


def to_prime_coordinates(vec: Dict[int, object], size: int, zero) -> list:
    """Coordinates of a ranked-basis vector in ``(f_1..f_m, g_1..g_m)``."""
    m = size // 2
    out = [zero] * size
    half = Fraction(1, 2)
    for i in range(m):
        odd = vec.get(2 * i, zero)
        even = vec.get(2 * i + 1, zero)
        out[i] = (even - odd) * half
        out[m + i] = (odd + even) * half
    return out


def to_prime_basis(M: GeneratorMatrix) -> list:
    """Dense matrix ``M'_n`` of the same endomorphism in the f/g basis."""
    if M.n < 2:
        raise ValueError("the f/g basis needs n >= 2")
    size, m = M.size, M.size // 2
    columns = []
    for i in range(1, m + 1):
        columns.append(to_prime_coordinates(M.apply(f_vector(M.n, i)), size, M.zero))
    for i in range(1, m + 1):
        columns.append(to_prime_coordinates(M.apply(g_vector(M.n, i)), size, M.zero))
    return [[columns[j][i] for j in range(size)] for i in range(size)]


def from_prime_basis(Mp: list, n: int, zero=Fraction(0)) -> list:
    """Inverse conjugation: ``P @ M' @ P^{-1}``."""
    size = len(Mp)
    P = change_of_basis_matrix(n)
    # P^{-1} e_k: rows of P^{-1} are f/g coordinates of e_k
    dense = [[zero] * size for _ in range(size)]
    for k in range(size):
        coords = to_prime_coordinates({k: 1}, size, Fraction(0))
        image = [sum((Mp[r][c] * coords[c] for c in range(size) if coords[c]), zero)
                 for r in range(size)]
        for i in range(size):
            dense[i][k] = sum((P[i][r] * image[r] for r in range(size) if P[i][r]), zero)
    return dense


def _blocks(Mp: list):
    m = len(Mp) // 2
    A1 = [row[:m] for row in Mp[:m]]
    A2 = [row[m:] for row in Mp[:m]]
    A3 = [row[:m] for row in Mp[m:]]
    A4 = [row[m:] for row in Mp[m:]]
    return A1, A2, A3, A4


def verify_blocks(n: int, x=None) -> Report:
    """Check the three block claims for ``M'_n`` exactly.

    ``A1`` is diagonal with entry ``-y_l`` where ``l`` is the length of
    ``s_{2i}``, each ``-y_j`` occurring ``C(n-2, j-1)`` times; ``A3 = 0``;
    ``A4 = M_{n-1}``.
    """
    if n < 2:
        raise ValueError("block structure needs n >= 2")
    rates = _rate_list(n, x)
    M = build_generator(n, rates)
    Mp = to_prime_basis(M)
    A1, _, A3, A4 = _blocks(Mp)
    ys = _prefix(rates)
    basis = ranked_basis(n)
    lengths = Counter()
    for i, row in enumerate(A1):
        for j, v in enumerate(row):
            if i != j and v:
                return Report("blocks", False, {"n": n}, {"block": "A1", "entry": (i, j), "value": v})
        ell = len(basis[2 * i + 1])
        lengths[ell] += 1
        if row[i] != -ys[ell]:
            return Report("blocks", False, {"n": n},
                          {"block": "A1", "entry": (i, i), "value": row[i], "expected": -ys[ell]})
    for j in range(1, n):
        if lengths[j] != math.comb(n - 2, j - 1):
            return Report("blocks", False, {"n": n},
                          {"block": "A1", "length": j, "count": lengths[j],
                           "expected": math.comb(n - 2, j - 1)})
    for i, row in enumerate(A3):
        for j, v in enumerate(row):
            if v:
                return Report("blocks", False, {"n": n}, {"block": "A3", "entry": (i, j), "value": v})
    prev = build_generator(n - 1, rates[: n - 1]).to_dense()
    for i, row in enumerate(A4):
        for j, v in enumerate(row):
            if v != prev[i][j]:
                return Report("blocks", False, {"n": n},
                              {"block": "A4", "entry": (i, j), "value": v, "expected": prev[i][j]})
    return Report("blocks", True, {"n": n, "diagonal_counts": dict(sorted(lengths.items()))})


def _prefix(rates: Sequence) -> list:
    """Prefix sums, ``ys[k] == y_k``."""
    ys = [rates[0]]
    for r in rates[1:]:
        ys.append(ys[-1] + r)
    return ys


# -- characteristic polynomial -------------------------------------------------

def characteristic_polynomial(M: GeneratorMatrix) -> UniPoly:
    """``det(lam I - M)`` by fraction-free elimination over ``Q[lam]``."""
    size = M.size
    lam = UniPoly.lam()
    mat = [[(lam if i == j else UniPoly()) - UniPoly((Fraction(M.entry(i, j)),))
            for j in range(size)] for i in range(size)]
    return det_bareiss(mat, exact_div=lambda a, b: a.exact_div(b), one=UniPoly((1,)))


def predicted_charpoly(n: int, x) -> UniPoly:
    rates = _rate_list(n, x)
    ys = _prefix(rates)
    out = UniPoly.lam()
    for j in range(1, n):
        out = out * UniPoly((ys[j], 1)) ** math.comb(n - 1, j)
    return out


@dataclass
class Eigenvalue:
    form: str
    value: object
    alg_mult: int
    geo_mult: int | None = None

    def to_json(self) -> dict:
        out = {"form": self.form, "value": _cell(self.value).strip('"'), "alg_mult": self.alg_mult}
        if self.geo_mult is not None:
            out["geo_mult"] = self.geo_mult
        return out


@dataclass
class SpectrumReport:
    n: int
    eigenvalues: List[Eigenvalue]
    certified_by: List[str] = field(default_factory=list)
    diagonalizable: bool | None = None

    def total_multiplicity(self) -> int:
        return sum(e.alg_mult for e in self.eigenvalues)

    def to_json(self) -> dict:
        return {"n": self.n, "eigenvalues": [e.to_json() for e in self.eigenvalues],
                "certified_by": self.certified_by, "diagonalizable": self.diagonalizable}


def spectrum(n: int, x=None, charpoly_max_n: int = 5, geometric: bool = False) -> SpectrumReport:
    """Eigenvalues ``0`` and ``-y_j`` with multiplicity ``C(n-1, j)``, certified.

    Certification re-runs the block check at every level ``n, n-1, ..., 2``;
    for ``n <= charpoly_max_n`` the characteristic polynomial is also
    computed directly and compared.
    """
    if n < 2:
        raise ValueError("spectrum needs n >= 2")
    rates = _rate_list(n, x)
    ys = _prefix(rates)
    eig = [Eigenvalue("0", rates[0] * 0, 1)]
    for j in range(1, n):
        eig.append(Eigenvalue(f"-y_{j}", -ys[j], math.comb(n - 1, j)))
    report = SpectrumReport(n, eig)
    for level in range(n, 1, -1):
        r = verify_blocks(level, rates[:level])
        if not r.ok:
            raise AssertionError(f"block structure fails at n={level}: {r.counterexample}")
    report.certified_by.append("block-induction")
    numeric = isinstance(rates[0], Fraction)
    if numeric and n <= charpoly_max_n:
        M = build_generator(n, rates)
        if characteristic_polynomial(M) != predicted_charpoly(n, rates):
            raise AssertionError("characteristic polynomial disagrees with the predicted spectrum")
        report.certified_by.append("characteristic-polynomial")
    if numeric and geometric:
        d = diagonalizability(n, rates)
        geo = d.details["geometric"]
        for e in eig:
            e.geo_mult = geo.get(format_rational(e.value))
        report.diagonalizable = d.details["diagonalizable"]
    return report


def eigenvector_suite(n: int, x=None) -> Report:
    """Check ``M_n f_i = -y_{len(s_{2i})} f_i`` for every ``i``."""
    rates = _rate_list(n, x)
    ys = _prefix(rates)
    M = build_generator(n, rates)
    basis = ranked_basis(n)
    lengths = Counter()
    for i in range(1, 2 ** (n - 2) + 1):
        ell = len(basis[2 * i - 1])
        lengths[ell] += 1
        f = f_vector(n, i)
        image = M.apply(f)
        expected = {k: -ys[ell] * v for k, v in f.items()}
        if image != expected:
            return Report("eigenvectors", False, {"n": n},
                          {"i": i, "image": image, "expected": expected})
    for ell in range(1, n):
        if lengths[ell] != math.comb(n - 2, ell - 1):
            return Report("eigenvectors", False, {"n": n},
                          {"length": ell, "count": lengths[ell]})
    # disjoint supports {2i-2, 2i-1} make the f_i independent
    supports = [frozenset(f_vector(n, i)) for i in range(1, 2 ** (n - 2) + 1)]
    independent = len(set().union(*supports)) == 2 * len(supports)
    return Report("eigenvectors", independent,
                  {"n": n, "count": len(supports), "lengths": dict(sorted(lengths.items()))})


def diagonalizability(n: int, x) -> Report:
    """Compare geometric and algebraic multiplicities by exact rank."""
    rates = _rate_list(n, x)
    if not isinstance(rates[0], Fraction):
        raise ValueError("diagonalizability needs numeric rates")
    ys = _prefix(rates)
    alg = Counter({Fraction(0): 1})
    for j in range(1, n):
        alg[-ys[j]] += math.comb(n - 1, j)
    dense = build_generator(n, rates).to_dense()
    size = len(dense)
    geo = {}
    for lam in alg:
        shifted = [[dense[i][j] - (lam if i == j else 0) for j in range(size)] for i in range(size)]
        geo[lam] = size - rank(shifted)
    deficient = {format_rational(l): (alg[l], geo[l]) for l in alg if geo[l] < alg[l]}
    diag = not deficient
    return Report("diagonalizability", True,
                  {"n": n, "diagonalizable": diag,
                   "algebraic": {format_rational(k): v for k, v in alg.items()},
                   "geometric": {format_rational(k): v for k, v in geo.items()},
                   "deficient": deficient})


def spectral_gap(n: int, x) -> dict:
    """Absolute gap ``y_1`` and the normalised ``(x_0+x_1)/y_n`` reading.

    The generator only involves ``x_0..x_{n-1}``; ``y_n`` is reported only
    when ``x_n`` is supplied.
    """
    rates = as_rates(x).require(n)
    report = spectrum(n, rates, charpoly_max_n=0)
    nonzero = [-e.value for e in report.eigenvalues if e.value != 0]
    gap = min(nonzero)
    y1 = rates.y(1)
    out = {
        "absolute": gap,
        "linear_form": "y_1",
        "relaxation_time": 1 / gap,
        "matches_y1": gap == y1,
        "normalized": None,
        "normalized_relaxation": None,
        "note": "normalised reading divides by y_n, which involves x_n; "
                "x_n is not a rate of the n-ball chain",
    }
    if len(rates) > n:
        yn = rates.y(n)
        out["normalized"] = y1 / yn
        out["normalized_relaxation"] = yn / y1
    return out
