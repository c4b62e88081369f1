from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballbins.arrays import TriangularArray
from ballbins.chains import (D, L, R, apply_T, apply_U, apply_X, check_composition, compositions,
                            couple_Z_to_Y, parse_tuple, project_p, rank_index, ranked_basis,
                            reachability_path)

from conftest import reference_T
from test_arrays import arrays


def test_apply_U_examples():
    assert apply_U((1, 0, 2, 5), 0) == (0, 1, 0, 2)
    assert apply_U((0, 0, 0), 2) == (0, 1, 0)
    assert apply_U((0, 0, 0), 0) == (0, 0, 0)
    with pytest.raises(ValueError):
        apply_U((0, 0), 3)


def test_apply_X_examples():
    A = TriangularArray(((4,), (5, 6)))
    assert apply_X(A, 0) == TriangularArray(((0,), (4, 0)))
    B = TriangularArray(((1,), (2, 3), (4, 5, 6)))
    assert apply_X(B, 0) == TriangularArray(((0,), (1, 0), (2, 3, 0)))
    assert apply_X(TriangularArray.zeros(2), 1) == TriangularArray(((1,), (0, 0)))


@given(arrays(), st.data())
def test_projection_intertwines(A, data):
    j = data.draw(st.integers(0, A.size))
    assert project_p(apply_X(A, j)) == apply_U(project_p(A), j)


def test_project_examples():
    assert project_p(TriangularArray.zeros(3)) == (0, 0, 0)
    assert project_p(TriangularArray(((1,), (0, 1)))) == (1, 1)
    assert project_p(TriangularArray(((2,), (1, 0)))) == (2, 1)


def test_apply_T_examples():
    assert apply_T((3,), 0) == (1, 2)
    assert apply_T((1, 2), 1) == (2, 1)
    assert apply_T((2, 1), 2) == (2, 1)
    assert apply_T((2, 1), 0) == (1, 2)
    assert apply_T((1,) * 5, 1) == (2, 1, 1, 1)
    with pytest.raises(ValueError):
        apply_T((1, 2), 3)


@pytest.mark.parametrize("n", range(1, 8))
def test_apply_T_matches_truncated_bins(n):
    for c in compositions(n):
        for j in range(n):
            assert apply_T(c, j) == reference_T(c, j, n)


@pytest.mark.parametrize("n", range(1, 10))
def test_composition_count_and_shape(n):
    cs = list(compositions(n))
    assert len(cs) == len(set(cs)) == 2 ** (n - 1)
    assert all(sum(c) == n and min(c) >= 1 for c in cs)


def test_check_composition():
    assert check_composition((2, 3), 5) == (2, 3)
    with pytest.raises(ValueError):
        check_composition((2, 0, 3))
    with pytest.raises(ValueError):
        check_composition((2, 3), 4)
    assert parse_tuple("2,3") == (2, 3)
    with pytest.raises(ValueError):
        parse_tuple("2,a")


def test_couple_examples():
    assert couple_Z_to_Y((1, 0, 2)) == (2, 1)
    assert couple_Z_to_Y((0, 0, 0, 0)) == (1, 1, 1, 1)
    assert couple_Z_to_Y((3, 0, 0, 0)) == (4,)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=5), st.data())
def test_coupling_commutes_with_dynamics(z, data):
    """The first n balls of the bin chain follow the composition chain."""
    n = len(z)
    j = data.draw(st.integers(0, n - 1))
    assert couple_Z_to_Y(apply_U(tuple(z), j)) == apply_T(couple_Z_to_Y(z), j, n)


def test_LRD_examples():
    assert L((2,)) == (2, 1) and R((2,)) == (3,)
    assert D((1, 2)) == (1, 1) and D((2, 1)) == (2,)
    with pytest.raises(ValueError):
        D((1,))


def test_ranked_basis_examples():
    assert ranked_basis(1) == ((1,),)
    assert ranked_basis(2) == ((1, 1), (2,))
    assert ranked_basis(3) == ((1, 1, 1), (1, 2), (2, 1), (3,))


@pytest.mark.parametrize("n", range(2, 11))
def test_ranked_basis_is_lexicographic(n):
    basis = ranked_basis(n)
    assert list(basis) == sorted(compositions(n))
    assert rank_index(n)[basis[5 % len(basis)]] == 5 % len(basis)
    prev = ranked_basis(n - 1)
    for i, s in enumerate(prev):
        assert basis[2 * i] == L(s) and basis[2 * i + 1] == R(s)
        assert D(basis[2 * i]) == s == D(basis[2 * i + 1])


@pytest.mark.parametrize("n", range(1, 7))
def test_reachability(n):
    for target in compositions(n):
        path = reachability_path(target)
        for start in compositions(n):
            c = start
            for j in path:
                c = apply_T(c, j, n)
            assert c == target
