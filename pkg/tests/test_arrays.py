from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballbins.arrays import (EMPTY, RateVector, TriangularArray, all_arrays_with_total,
                            count_row_sums, enumerate_row_sums, multinomial, weak_compositions,
                            weight, weight_factorwise, weight_sum, weight_symbolic)
from ballbins.exact import MultiPoly, PolyFraction, fraction_equal, variables

from conftest import rate_vectors


def arrays(max_size=4, max_entry=3):
    def build(size):
        return st.tuples(*[st.tuples(*[st.integers(0, max_entry)] * k)
                           for k in range(1, size + 1)]).map(TriangularArray)
    return st.integers(1, max_size).flatmap(build)


def test_sums_of_small_array():
    A = TriangularArray(((1,), (0, 1)))
    assert (A.row_sum(1), A.row_sum(2)) == (1, 1)
    assert (A.col_sum(1), A.col_sum(2)) == (1, 1)
    assert (A.diag_sum(1), A.diag_sum(2)) == (0, 2)
    with pytest.raises(IndexError):
        A.row_sum(3)


@given(arrays())
def test_row_column_diagonal_totals_agree(A):
    n = A.size
    total = sum(map(sum, A.rows))
    assert sum(A.row_sum(i) for i in range(1, n + 1)) == total
    assert sum(A.col_sum(i) for i in range(1, n + 1)) == total
    assert sum(A.diag_sum(i) for i in range(1, n + 1)) == total


def test_array_validation():
    with pytest.raises(ValueError):
        TriangularArray(((1,), (0,)))
    with pytest.raises(ValueError):
        TriangularArray(((-1,),))
    assert TriangularArray.from_json([[1], [0, 2]]).to_json() == [[1], [0, 2]]


@pytest.mark.parametrize("parts,value", [((0, 0, 0), 1), ((1, 1), 2), ((2, 1, 1), 12)])
def test_multinomial_examples(parts, value):
    assert multinomial(parts) == value


@given(st.lists(st.integers(0, 6), max_size=5))
def test_multinomial_factorial_formula(parts):
    expected = math.factorial(sum(parts)) // math.prod(math.factorial(p) for p in parts)
    assert multinomial(parts) == expected


def test_rate_vector_validation():
    assert RateVector.parse("0.25,1/2,3").rates == (Fraction(1, 4), Fraction(1, 2), Fraction(3))
    with pytest.raises(ValueError):
        RateVector((0, 1))
    with pytest.raises(ValueError):
        RateVector((1, -1))
    with pytest.raises(ValueError):
        RateVector((1, 0)).require_standing()
    assert RateVector((1, 2, 3)).y(2) == 6


def test_weight_examples_symbolic():
    x0, x1, x2 = variables(3)
    A = TriangularArray(((1,), (0, 0)))
    expected = PolyFraction(x0 ** 2 * x1, [1, 2])
    assert weight_symbolic(A) == expected
    B = TriangularArray(((1,), (0, 1)))
    assert weight_symbolic(B) == PolyFraction(2 * x0 ** 2 * x1 * x2, [1, 3])


@pytest.mark.parametrize("a", range(6))
def test_size_one_weight(a):
    assert weight(TriangularArray(((a,),)), [1, 1]) == Fraction(1, 2 ** (a + 1))


def test_empty_array_weight():
    assert weight(EMPTY, [1]) == 1
    assert weight_symbolic(EMPTY, 1) == PolyFraction(MultiPoly.const(1, 1))


@given(arrays(), rate_vectors(5))
def test_weight_routes_agree(A, x):
    w = weight(A, x)
    assert w == weight_factorwise(A, x)
    assert w == weight_symbolic(A, 5).evaluate(x)


@given(arrays(max_size=3), rate_vectors(4), st.fractions(min_value=Fraction(1, 7), max_value=7))
def test_weight_is_scale_invariant(A, x, s):
    assert weight(A, x) == weight(A, [r * s for r in x])


@given(st.integers(0, 6), st.integers(1, 4))
def test_weak_compositions_count_and_content(total, parts):
    comps = list(weak_compositions(total, parts))
    assert len(comps) == math.comb(total + parts - 1, parts - 1)
    assert len(set(comps)) == len(comps)
    assert all(sum(c) == total and len(c) == parts for c in comps)


def test_enumerate_row_sums_examples():
    H = list(enumerate_row_sums((1, 1)))
    assert sorted(A.rows for A in H) == sorted([((1,), (1, 0)), ((1,), (0, 1))])
    assert len(list(enumerate_row_sums((3,)))) == 1
    assert len(list(enumerate_row_sums((1, 1, 1)))) == 6 == count_row_sums((1, 1, 1))


@given(st.lists(st.integers(0, 3), min_size=1, max_size=3))
def test_enumerate_row_sums_matches_count(c):
    arrays_ = list(enumerate_row_sums(c))
    assert len(arrays_) == count_row_sums(c)
    assert all(A.row_sum(i) == c[i - 1] for A in arrays_ for i in range(1, len(c) + 1))


def test_enumeration_cap():
    with pytest.raises(ValueError):
        next(enumerate_row_sums((5, 5, 5), cap=10))


@given(rate_vectors(3))
def test_weight_sum_matches_termwise(x):
    arrays_ = list(all_arrays_with_total(2, 3))
    assert weight_sum(arrays_, x) == sum(weight(A, x) for A in arrays_)


def test_symbolic_row_sum_example():
    x0, x1, x2 = variables(3)
    total = sum((weight_symbolic(A) for A in enumerate_row_sums((1, 1))), PolyFraction(MultiPoly.zero(3)))
    expected = (PolyFraction(x0 ** 2 * x1 ** 2, [2, 2]) + PolyFraction(2 * x0 ** 2 * x1 * x2, [1, 3]))
    assert fraction_equal(total, expected)
