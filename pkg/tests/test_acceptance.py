"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line (visible with
``pytest -s`` and collected in the terminal summary).  Running this file
directly with ``python3 tests/test_acceptance.py`` prints the same lines.
"""

from __future__ import annotations

import itertools
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from ballbins.arrays import TriangularArray
from ballbins.chains import compositions, rank_index
from ballbins.exact import MultiPoly, PolyFraction, format_rational, fraction_equal, variables
from ballbins.sampling import (POOLED, TOLERANCES, EmpiricalDistribution, SeededStream, cell_zscores,
                              cftp_samples, grand_coupling_time_bruteforce,
                              grand_coupling_time_formula, sample_Z_perfect, tv_distance)
from ballbins.spectral import (build_generator, characteristic_polynomial, diagonalizability,
                              eigenvector_suite, predicted_charpoly, verify_blocks)
from ballbins.stationary import (diagonal_identity_check, leftmost_bin_marginal, monomial_special,
                                normalization_check, partition_divisibility, pi_Y_all,
                                pi_Y_finite, pi_Y_series, pi_Z_prefix, verify_master_X,
                                verify_master_Y)

RESULTS: dict = {}
TOL = Fraction(1, 10 ** 9)


def rational_rates(rng: random.Random, length: int) -> list:
    return [Fraction(rng.randint(1, 12), rng.randint(1, 12)) for _ in range(length)]


@contextmanager
def criterion(k: int, title: str, budget: float):
    """Time the body, record and print the outcome, then re-raise any failure."""
    start = time.perf_counter()
    failure = None
    try:
        yield
    except AssertionError as err:
        failure = err
    elapsed = time.perf_counter() - start
    if failure is None and elapsed > budget:
        failure = AssertionError(f"runtime {elapsed:.1f}s exceeds {budget:.0f}s")
    status = "PASS" if failure is None else "FAIL"
    line = f"CRITERION {k}: {status} - {title} ({elapsed:.2f}s / {budget:g}s)"
    if failure is not None:
        line += f" :: {failure}"
    RESULTS[k] = line
    print(line, flush=True)
    if failure is not None:
        raise failure


def test_criterion_1_worked_example():
    with criterion(1, "(2,3) stationary value, symbolic and 7/54 at unit rates", 1):
        x0, x1, x2 = variables(5)[:3]
        num = x0 * x1 * (x1 ** 3 + x0 * x1 ** 2 + 3 * x1 ** 2 * x2 + 3 * x1 * x2 ** 2
                         + 2 * x0 * x1 * x2 + x2 ** 3 + 3 * x0 * x2 ** 2)
        displayed = PolyFraction(num, [2, 3])
        value = pi_Y_finite((2, 3), symbolic=True)
        assert fraction_equal(value, displayed), "symbolic value differs"
        assert value.evaluate([1] * 5) == Fraction(7, 54)
        assert pi_Y_finite((2, 3), [1] * 5) == Fraction(7, 54)


def test_criterion_2_generator():
    with criterion(2, "symbolic M_3 entry-for-entry", 1):
        x0, x1, x2 = variables(3)
        Z = MultiPoly.zero(3)
        order = [(1, 1, 1), (1, 2), (2, 1), (3,)]
        displayed = [
            [-x1 - x2, x0, Z, Z],
            [x2, -x0 - x1, x0, x0],
            [x1, x1, -x0 - x1, Z],
            [Z, Z, x1, -x0],
        ]
        M = build_generator(3)
        idx = rank_index(3)
        for r, a in enumerate(order):
            for c, b in enumerate(order):
                assert M.entry(idx[a], idx[b]) == displayed[r][c], (a, b)


def test_criterion_3_spectrum():
    with criterion(3, "charpoly n<=5 x5 rates; blocks n<=8; eigenvectors n<=10", 120):
        rng = random.Random(3)
        for _ in range(5):
            x = rational_rates(rng, 10)
            for n in range(2, 6):
                M = build_generator(n, x[:n])
                assert characteristic_polynomial(M) == predicted_charpoly(n, x[:n]), (n, x[:n])
            for n in range(2, 9):
                rep = verify_blocks(n, x[:n])
                assert rep.ok, (n, rep.counterexample)
            for n in range(2, 11):
                rep = eigenvector_suite(n, x[:n])
                assert rep.ok, (n, rep.counterexample)
        for n in range(2, 5):
            assert verify_blocks(n).ok  # symbolic rates


def test_criterion_4_stationarity():
    with criterion(4, "null vector n<=8 x10 rates; enriched balance on 500 arrays", 120):
        rng = random.Random(4)
        for _ in range(10):
            x = rational_rates(rng, 9)
            for n in range(1, 9):
                rep = verify_master_Y(n, x[:n], oracle=True)
                assert rep.ok, (n, x[:n], rep.counterexample)
        cases = {"I": 0, "II": 0}
        for _ in range(500):
            size = rng.randint(1, 4)
            rows = tuple(tuple(rng.choice((0, 0, 1, 1, 2, 3)) for _ in range(k))
                         for k in range(1, size + 1))
            x = rational_rates(rng, size + 1)
            rep = verify_master_X(TriangularArray(rows), x)
            assert rep.ok, rep.counterexample
            cases[rep.details["case"]] += 1
        assert cases["I"] > 0 and cases["II"] > 0


def test_criterion_5_series():
    with criterion(5, "series form within 1e-9 of the finite form on C_n, n<=4", 60):
        for x in ([1, 1, 1, 1], [Fraction(3, 2), 1, Fraction(2, 3), Fraction(1, 2)]):
            for n in range(1, 5):
                for c in compositions(n):
                    res = pi_Y_series(c, x[:n], tolerance=TOL)
                    exact = pi_Y_finite(c, x[:n])
                    assert res.converged, c
                    assert 0 <= exact - res.value <= res.tail_bound <= TOL, c


def test_criterion_6_closed_forms():
    with criterion(6, "partition function n<=5; leftmost bin n<=8; monomial cases n<=7", 120):
        for n in range(1, 6):
            rep = partition_divisibility(n)
            assert rep.ok, rep.counterexample
        rng = random.Random(6)
        for n in range(2, 9):
            x = rational_rates(rng, n)
            law = pi_Y_all(n, x)
            for j in range(1, n + 1):
                direct = sum(v for c, v in law.items() if c[0] == j)
                assert leftmost_bin_marginal(j, n, x) == direct, (n, j)
        for n in range(2, 8):
            x = rational_rates(rng, n)
            for ell in range(2, n + 1):
                alpha = n - ell + 1
                c = (alpha,) + (1,) * (ell - 1)
                params = {"alpha": alpha, "ell": ell}
                assert pi_Y_finite(c, x) == monomial_special(1, params, x), c
                if n <= 6:
                    assert fraction_equal(pi_Y_finite(c, symbolic=True),
                                          monomial_special(1, params, nvars=n)), c
            zeroed = x[:2] + [Fraction(0)] * (n - 2)
            for c in compositions(n):
                expected = monomial_special(2, {"n": n, "ell": len(c)}, zeroed)
                assert pi_Y_finite(c, zeroed) == expected, c
                if n <= 6:
                    sym = pi_Y_finite(c, symbolic=True)
                    sub = {k: MultiPoly.zero(n) for k in range(2, n)}
                    limit = PolyFraction(sym.num.substitute(sub), [])
                    den = sym.den.substitute(sub)
                    target = monomial_special(2, {"n": n, "ell": len(c)}, nvars=n)
                    assert fraction_equal((limit.num, den), target), c


def test_criterion_7_coupling():
    with criterion(7, "coupling formula equals brute force on 1e4 sequences, n=2..6", 60):
        assert grand_coupling_time_formula((1, 2, 0, 1), 3) == 3
        assert grand_coupling_time_bruteforce((1, 2, 0, 1), 3) == 3
        stream = SeededStream(7)
        for n in range(2, 7):
            seqs = stream.rng.integers(0, n, size=(10_000, 8 * n)).tolist()
            agree = sum(grand_coupling_time_formula(u, n) == grand_coupling_time_bruteforce(u, n)
                        for u in seqs)
            assert agree == 10_000, (n, agree)


def test_criterion_8_perfect_samplers():
    with criterion(8, "Z sampler TV<=0.01 (1e6); CFTP TV<=0.01 (1e5); cells within 3 sigma", 300):
        x = [1, 1, 1]
        Z = sample_Z_perfect(3, x, SeededStream(8), count=1_000_000, bins=2)
        emp = EmpiricalDistribution.from_samples(map(tuple, Z.tolist()))
        exact = {s: pi_Z_prefix(s, x, 3) for s in emp.counts}
        tv = tv_distance(emp, exact, complete=False)
        assert tv <= TOLERANCES.tv, f"Z sampler TV {tv:.4f}"
        z = cell_zscores(emp, exact, TOLERANCES.min_expected)
        worst = max(abs(v) for v in z.values())
        assert worst <= TOLERANCES.sigma, f"Z sampler worst cell {worst:.2f} sigma"

        rates = [2, 1, 1, 1]
        emp = cftp_samples(4, rates, 100_000, SeededStream(80))
        exact = pi_Y_all(4, rates)
        tv = tv_distance(emp, exact)
        assert tv <= TOLERANCES.tv, f"CFTP TV {tv:.4f}"
        z = cell_zscores(emp, exact, TOLERANCES.min_expected)
        assert POOLED not in z  # every state of the finite chain is well populated
        worst = max(abs(v) for v in z.values())
        assert worst <= TOLERANCES.sigma, f"CFTP worst cell {worst:.2f} sigma"


def test_criterion_9_normalization():
    with criterion(9, "weight sum and box identity reach their limits within 1e-9", 60):
        for n in (1, 2):
            rep = normalization_check(n, [1] * (n + 1), TOL)
            assert rep.ok, rep.counterexample
        for n in (1, 2, 3):
            for deltas in itertools.product(range(3), repeat=n - 1):
                rep = diagonal_identity_check(deltas, [1] * (n + 1), TOL)
                assert rep.ok, (deltas, rep.counterexample)


def test_criterion_10_non_diagonalizable():
    with criterion(10, "geometric 1 < algebraic 2 at -y_1 for n=3; n=4 not diagonalizable", 10):
        for x in ([1, 1, 1], [Fraction(2, 3), Fraction(5), Fraction(1, 4)]):
            rep = diagonalizability(3, x)
            y1 = format_rational(-(Fraction(x[0]) + Fraction(x[1])))
            assert rep.details["algebraic"][y1] == 2
            assert rep.details["geometric"][y1] == 1
            assert not rep.details["diagonalizable"]
        for x in ([1, 1, 1, 1], [Fraction(3), Fraction(1, 2), Fraction(7, 5), Fraction(2)]):
            assert not diagonalizability(4, x).details["diagonalizable"]


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    raise SystemExit(1 if failed else 0)
