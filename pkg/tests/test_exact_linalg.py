from __future__ import annotations

import itertools
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from hecke_lab.exact_linalg import (
    SingularMatrixError,
    as_int_matrix,
    content,
    det,
    diag,
    hnf_column,
    identity,
    matmul,
    snf,
    transpose,
)


def leibniz_det(m):
    n = len(m)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1
        for i in range(n):
            prod *= m[i][perm[i]]
        total += (-1) ** inversions * prod
    return total


def minors_gcd(m, k):
    n = len(m)
    g = 0
    for rows in itertools.combinations(range(n), k):
        for cols in itertools.combinations(range(n), k):
            g = gcd(g, leibniz_det([[m[r][c] for c in cols] for r in rows]))
    return g


def random_unimodular(draw, n):
    """Product of elementary column operations and sign flips."""
    u = [list(r) for r in identity(n)]
    for _ in range(draw(st.integers(0, 6))):
        i = draw(st.integers(0, n - 1))
        j = draw(st.integers(0, n - 1))
        if i == j:
            continue
        q = draw(st.integers(-3, 3))
        for r in range(n):
            u[r][j] += q * u[r][i]
    if draw(st.booleans()):
        for r in range(n):
            u[r][0] = -u[r][0]
    return as_int_matrix(u)


@st.composite
def nonsingular(draw, max_n=4, bound=12):
    """L @ T @ P with L unit lower, T upper with nonzero diagonal, P a permutation."""
    n = draw(st.integers(1, max_n))
    entry = st.integers(-bound, bound)
    pivot = st.integers(1, bound) | st.integers(-bound, -1)
    lower = [[1 if i == j else (draw(st.integers(-3, 3)) if j < i else 0) for j in range(n)] for i in range(n)]
    upper = [[draw(pivot) if i == j else (draw(entry) if j > i else 0) for j in range(n)] for i in range(n)]
    perm = draw(st.permutations(range(n)))
    p = [[int(perm[i] == j) for j in range(n)] for i in range(n)]
    return matmul(matmul(as_int_matrix(lower), as_int_matrix(upper)), as_int_matrix(p))


@st.composite
def matrix_and_unimodular(draw):
    m = draw(nonsingular())
    return m, random_unimodular(draw, len(m))


def test_det_examples():
    assert det([[1, 0], [0, 1]]) == 1
    assert det([[2, 1], [0, 2]]) == 4
    assert det([[1, 2], [3, 9]]) == 3
    assert det([[0, 1], [1, 0]]) == -1
    assert det([[1, 2], [2, 4]]) == 0


def test_det_large_entries_stay_exact():
    big = 10**40
    m = [[big + 1, big], [big, big - 1]]
    assert det(m) == (big + 1) * (big - 1) - big * big == -1


@settings(max_examples=200, deadline=None)
@given(nonsingular(max_n=5, bound=30))
def test_det_matches_leibniz(m):
    assert det(m) == leibniz_det(m)


def test_hnf_examples():
    assert hnf_column([[2, 0], [0, 1]]) == ((2, 0), (0, 1))
    assert hnf_column([[2, 1], [0, 1]]) == ((2, 1), (0, 1))
    assert hnf_column([[1, 0], [1, 2]]) == ((2, 1), (0, 1))
    h = hnf_column([[4, 6], [2, 8]])
    assert h[1][0] == 0 and h[0][0] * h[1][1] == abs(det([[4, 6], [2, 8]]))


def test_hnf_rejects_singular():
    with pytest.raises(SingularMatrixError):
        hnf_column([[1, 2], [2, 4]])


@settings(max_examples=200, deadline=None)
@given(matrix_and_unimodular())
def test_hnf_invariant_under_unimodular_columns(pair):
    m, u = pair
    assert abs(det(u)) == 1
    assert hnf_column(matmul(m, u)) == hnf_column(m)


@settings(max_examples=200, deadline=None)
@given(nonsingular())
def test_hnf_shape_and_idempotence(m):
    h = hnf_column(m)
    n = len(m)
    for i in range(n):
        assert h[i][i] > 0
        for j in range(i):
            assert h[i][j] == 0
        for j in range(i + 1, n):
            assert 0 <= h[i][j] < h[i][i]
    assert hnf_column(h) == h
    prod = 1
    for i in range(n):
        prod *= h[i][i]
    assert prod == abs(det(m))


def test_snf_examples():
    assert snf([[2, 0], [0, 2]]) == (2, 2)
    assert snf([[2, 1], [0, 2]]) == (1, 4)
    assert snf([[2, 4], [6, 8]]) == (2, 4)
    assert snf([[2, 0, 0], [0, 6, 0], [0, 0, 5]]) == (1, 2, 30)


def test_snf_rejects_singular():
    with pytest.raises(SingularMatrixError):
        snf([[1, 2], [2, 4]])


@settings(max_examples=200, deadline=None)
@given(nonsingular())
def test_snf_matches_gcd_of_minors(m):
    d = snf(m)
    n = len(m)
    for k in range(1, n + 1):
        prod = 1
        for x in d[:k]:
            prod *= x
        assert prod == minors_gcd(m, k)
    for a, b in zip(d, d[1:]):
        assert b % a == 0


@settings(max_examples=100, deadline=None)
@given(matrix_and_unimodular(), st.data())
def test_snf_invariant_under_two_sided_unimodular(pair, data):
    m, u = pair
    v = random_unimodular(data.draw, len(m))
    assert snf(matmul(v, matmul(m, u))) == snf(m)


def test_helpers():
    assert transpose(((1, 2), (3, 4))) == ((1, 3), (2, 4))
    assert diag([2, 3]) == ((2, 0), (0, 3))
    assert content([[4, 6], [0, 10]]) == 2
    with pytest.raises(ValueError):
        as_int_matrix([[1, 2, 3], [4, 5, 6]])
