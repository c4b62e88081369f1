from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings

from ballbins.chains import rank_index
from ballbins.exact import UniPoly, variables
from ballbins.spectral import (build_generator, change_of_basis_matrix, characteristic_polynomial,
                              diagonalizability, eigenvector_suite, from_prime_basis,
                              predicted_charpoly, spectral_gap, spectrum, to_prime_basis,
                              verify_blocks)

from conftest import random_rates, rate_vectors
from oracles import reference_generator


def test_generator_three_symbolic():
    x0, x1, x2 = variables(3)
    order = [(1, 1, 1), (1, 2), (2, 1), (3,)]
    Z = x0 * 0
    expected = [
        [-x1 - x2, x0, Z, Z],
        [x2, -x0 - x1, x0, x0],
        [x1, x1, -x0 - x1, Z],
        [Z, Z, x1, -x0],
    ]
    M = build_generator(3)
    idx = rank_index(3)
    for r, a in enumerate(order):
        for c, b in enumerate(order):
            assert M.entry(idx[a], idx[b]) == expected[r][c]


@pytest.mark.parametrize("n", range(1, 7))
def test_generator_matches_reference(n):
    rates = random_rates(random.Random(n), n)
    states, ref = reference_generator(n, [sympy.Rational(r.numerator, r.denominator) for r in rates])
    M = build_generator(n, rates)
    idx = rank_index(n)
    for a in states:
        for b in states:
            assert sympy.Rational(M.entry(idx[a], idx[b])) == ref[states.index(a), states.index(b)]


@pytest.mark.parametrize("n", range(1, 8))
def test_generator_columns_sum_to_zero(n):
    M = build_generator(n, random_rates(random.Random(n), n))
    assert all(sum(col.values()) == 0 for col in M.cols)


def test_generator_cap():
    with pytest.raises(ValueError):
        build_generator(40)


def test_spectrum_three_unit_rates():
    rep = spectrum(3, [1, 1, 1])
    values = sorted(v for e in rep.eigenvalues for v in [e.value] * e.alg_mult)
    assert values == [-3, -2, -2, 0]
    assert "characteristic-polynomial" in rep.certified_by


@pytest.mark.parametrize("n", [2, 3, 4])
def test_charpoly_matches_sympy(n):
    rates = random_rates(random.Random(10 + n), n)
    _, ref = reference_generator(n, [sympy.Rational(r.numerator, r.denominator) for r in rates])
    lam = sympy.Symbol("lam")
    ref_coeffs = sympy.Poly(ref.charpoly(lam).as_expr(), lam).all_coeffs()[::-1]
    ours = characteristic_polynomial(build_generator(n, rates))
    assert UniPoly([Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q)) for c in ref_coeffs]) == ours
    assert ours == predicted_charpoly(n, rates)


@settings(max_examples=10)
@given(rate_vectors(5))
def test_charpoly_product_form(x):
    for n in range(2, 6):
        rates = x[:n]
        M = build_generator(n, rates)
        assert characteristic_polynomial(M) == predicted_charpoly(n, rates)


@pytest.mark.parametrize("n", range(2, 9))
def test_blocks(n):
    rep = verify_blocks(n, random_rates(random.Random(n), n))
    assert rep.ok, rep.counterexample
    assert rep.details["diagonal_counts"] == {j: math.comb(n - 2, j - 1) for j in range(1, n)}


@pytest.mark.parametrize("n", [2, 3, 4])
def test_blocks_symbolic(n):
    assert verify_blocks(n).ok


@pytest.mark.parametrize("n", [3, 4, 5])
def test_prime_basis_round_trip(n):
    M = build_generator(n, random_rates(random.Random(n), n))
    assert from_prime_basis(to_prime_basis(M), n) == M.to_dense()
    P = change_of_basis_matrix(n)
    assert sympy.Matrix(P).det() != 0


@pytest.mark.parametrize("n", range(2, 11))
def test_eigenvectors(n):
    rep = eigenvector_suite(n, random_rates(random.Random(n), n))
    assert rep.ok, rep.counterexample
    assert rep.details["count"] == 2 ** (n - 2)


def test_non_diagonalizable_three():
    rep = diagonalizability(3, [1, 1, 1])
    assert not rep.details["diagonalizable"]
    assert rep.details["algebraic"]["-2"] == 2
    assert rep.details["geometric"]["-2"] == 1
    _, ref = reference_generator(3, [1, 1, 1])
    assert (ref + 2 * sympy.eye(4)).rank() == 3


def test_non_diagonalizable_four():
    rates = [Fraction(2), Fraction(1, 3), Fraction(5), Fraction(1, 2)]
    rep = diagonalizability(4, rates)
    assert not rep.details["diagonalizable"]
    _, ref = reference_generator(4, [sympy.Rational(r.numerator, r.denominator) for r in rates])
    assert not ref.is_diagonalizable()


def test_spectral_gap_readings():
    gap = spectral_gap(3, [1, 2, 3])
    assert gap["absolute"] == 3 and gap["matches_y1"]
    assert gap["normalized"] is None
    gap = spectral_gap(3, [1, 2, 3, 4])
    assert gap["normalized"] == Fraction(3, 10)
    assert gap["relaxation_time"] == Fraction(1, 3)


def test_spectrum_geometric_flag():
    rep = spectrum(3, [1, 1, 1], geometric=True)
    assert rep.diagonalizable is False
    geo = {e.form: e.geo_mult for e in rep.eigenvalues}
    assert geo["-y_1"] == 1
