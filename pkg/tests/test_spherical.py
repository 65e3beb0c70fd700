from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hecke_lab.hecke_enum import coset_count, enumerate_cosets, partitions
from hecke_lab.spherical import (
    SpectralParam,
    check_spherical_bound,
    chi,
    complete_homogeneous,
    format_complex,
    hecke_eigenvalue_lambda,
    is_dominant,
    parse_complex,
    partition_decomposition,
    rho,
    satake_parameters,
    spherical_bound_ratio,
    spherical_function,
    spherical_transform_h,
    symmetric_oracle,
    theta,
    to_dominant,
)


def neg_rho(n):
    return [-float(r) for r in rho(n)]


def random_mu(rng, n, tempered):
    im = rng.uniform(-5, 5, n)
    re = np.zeros(n) if tempered else rng.uniform(-1, 1, n)
    return [complex(a, b) for a, b in zip(re, im)]


def coset_sum_direct(n, p, l, mu):
    """Per-representative character sum, without grouping by diagonal."""
    shifted = [m + float(r) for m, r in zip(mu, rho(n))]
    reps = enumerate_cosets(n, p, l)
    total = sum(cmath.exp(-math.log(p) * sum(v * s for v, s in zip(rep.diag_valuations, shifted))) for rep in reps)
    return total / len(reps)


def test_rho_and_theta():
    assert rho(2) == (Fraction(1, 2), Fraction(-1, 2))
    assert rho(3) == (1, 0, -1)
    for n in range(2, 6):
        r = rho(n)
        assert sum(r) == 0 and tuple(-x for x in reversed(r)) == r
    assert theta([2j, -2j]) == 0
    assert theta(neg_rho(2)) == 0.5
    assert theta([0.3 + 2j, -0.3 - 2j]) == pytest.approx(0.3)


def test_spectral_param():
    mu = SpectralParam((0.5 + 1j, -0.5 - 1j))
    assert mu.normalized and mu.n == 2
    assert not SpectralParam((1, 0)).normalized
    with pytest.raises(ValueError):
        SpectralParam((float("nan"), 0))


def test_chi_examples():
    assert chi([0.7 + 2j, -0.7 - 2j], (0, 0), 3) == 1
    for p in (2, 3, 5):
        assert chi([1, -1], (0, 1), p) == pytest.approx(p)
        s = 0.37 + 1.1j
        assert chi([s, -s], (1, 0), p) == pytest.approx(p ** (-s))


def test_transform_examples():
    for n in (2, 3, 4):
        for l in range(4):
            assert abs(spherical_transform_h(n, 2, l, neg_rho(n)) - 1) < 1e-12
    for p in (2, 3, 5):
        s = 0.21 + 0.8j
        expected = math.sqrt(p) * (p**s + p ** (-s)) / (p + 1)
        assert spherical_transform_h(2, p, 1, [s, -s]) == pytest.approx(expected, rel=1e-12)
        assert spherical_transform_h(2, p, 0, [s, -s]) == 1


def test_transform_matches_per_representative_sum(rng):
    for n, p, l in [(2, 3, 3), (3, 2, 2), (3, 3, 2), (4, 2, 2)]:
        mu = random_mu(rng, n, tempered=False)
        assert spherical_transform_h(n, p, l, mu) == pytest.approx(coset_sum_direct(n, p, l, mu), rel=1e-12)


def test_lambda_examples():
    for p in (2, 3, 5):
        s = -0.4 + 2.5j
        assert hecke_eigenvalue_lambda(2, p, 1, [s, -s]) == pytest.approx(p**s + p ** (-s), rel=1e-12)
        assert hecke_eigenvalue_lambda(2, p, 0, [s, -s]) == pytest.approx(1)
        assert hecke_eigenvalue_lambda(2, p, 1, neg_rho(2)) == pytest.approx((p + 1) / math.sqrt(p), rel=1e-12)


def test_oracle_examples():
    s = 0.3 - 0.9j
    for p in (2, 3):
        assert symmetric_oracle(2, p, 0, [s, -s]) == 1
        assert symmetric_oracle(2, p, 2, [s, -s]) == pytest.approx(p ** (2 * s) + 1 + p ** (-2 * s))
        s1, s2, s3 = 0.2 + 1j, -0.5j, 0.7
        # alpha_i = p^{-mu_i}; see the convention note in satake_parameters
        assert symmetric_oracle(3, p, 1, [s1, s2, s3]) == pytest.approx(p ** (-s1) + p ** (-s2) + p ** (-s3))


def test_oracle_matches_explicit_polynomial(rng):
    mu = random_mu(rng, 3, tempered=False)
    alphas = satake_parameters(3, mu)
    for l in range(4):
        assert symmetric_oracle(3, 3, l, mu) == pytest.approx(complete_homogeneous(l, alphas), rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p", [2, 3])
def test_oracle_equivalence(n, p, rng):
    for trial in range(100):
        mu = random_mu(rng, n, tempered=trial % 2 == 0)
        for l in range(4):
            lam = hecke_eigenvalue_lambda(n, p, l, mu)
            ref = symmetric_oracle(n, p, l, mu)
            assert abs(lam - ref) <= 1e-9 * max(abs(ref), 1e-300)


def test_inverted_satake_convention_is_detected():
    """alpha_i = p^{+mu_i} disagrees with the coset sum once n = 3."""
    mu = [0.3 + 0.4j, 0.1 - 1.2j, -0.4 + 0.8j]
    lam = hecke_eigenvalue_lambda(3, 2, 1, mu)
    flipped = sum(2 ** m for m in mu)
    assert abs(lam - symmetric_oracle(3, 2, 1, mu)) < 1e-12
    assert abs(lam - flipped) > 1e-3


def test_weyl_invariance(rng):
    for n, p, l in [(2, 3, 3), (3, 2, 3), (4, 2, 2)]:
        mu = random_mu(rng, n, tempered=False)
        base = spherical_transform_h(n, p, l, mu)
        for perm in itertools.permutations(range(n)):
            assert spherical_transform_h(n, p, l, [mu[i] for i in perm]) == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_tempered_contraction(rng):
    for _ in range(50):
        for n, p, l in [(2, 3, 4), (3, 2, 3)]:
            mu = random_mu(rng, n, tempered=True)
            assert abs(spherical_transform_h(n, p, l, mu)) <= 1 + 1e-12
            assert abs(hecke_eigenvalue_lambda(n, p, l, mu)) <= math.comb(l + n - 1, n - 1) + 1e-9


def test_spherical_function_examples():
    for p in (2, 3, 5):
        assert spherical_function(2, p, (0, 0), [0.3j, -0.3j]) == 1
        assert spherical_function(2, p, (0, 1), [0, 0]) == pytest.approx(2 * math.sqrt(p) / (p + 1), rel=1e-12)
    for part in [(0, 1), (0, 3), (1, 2), (0, 0, 2), (0, 1, 1)]:
        assert abs(spherical_function(len(part), 2, part, neg_rho(len(part))) - 1) < 1e-12


def test_partition_decomposition(rng):
    for n, p, l in [(2, 3, 4), (3, 2, 3), (4, 2, 2)]:
        mu = random_mu(rng, n, tempered=False)
        assert partition_decomposition(n, p, l, mu) == pytest.approx(spherical_transform_h(n, p, l, mu), rel=1e-12)


def test_spherical_bound_examples():
    t, delta = 0.8, 0.5
    tempered = [t * 1j, -t * 1j]
    for p in (2, 3, 5):
        # eta at diag(1, p) is 2 sqrt(p) cos(t log p) / (p + 1); the bound is p^{-(1 - delta)/2}
        expected = abs(2 * math.sqrt(p) * math.cos(t * math.log(p)) / (p + 1)) * p ** ((1 - delta) / 2)
        r = spherical_bound_ratio(2, p, (0, 1), tempered, delta)
        assert r <= 3
        assert r == pytest.approx(expected, rel=1e-12)
        assert spherical_bound_ratio(2, p, (0, 0), tempered, 0.5) == pytest.approx(1)
    assert math.isfinite(spherical_bound_ratio(2, 3, (0, 2), [0.5, -0.5], 0.5))
    with pytest.raises(ValueError):
        spherical_bound_ratio(2, 3, (0, 1), neg_rho(2), 0.5)


def test_spherical_bound_sweep():
    sweep = [q.parts for w in range(6) for q in partitions(2, w)]
    for p in (2, 3, 5):
        report = check_spherical_bound(2, p, sweep, to_dominant([1.3j, -1.3j]), 0.5)
        assert report.passed and report.max_ratio <= 3
    report3 = check_spherical_bound(3, 2, [q.parts for w in range(4) for q in partitions(3, w)], [0.5j, 0, -0.5j], 0.5)
    assert report3.passed
    assert report3.to_dict()["passed"] is True


def test_dominance_helpers():
    mu = [-0.5 + 1j, 0.3, 0.2j]
    assert not is_dominant(mu)
    d = to_dominant(mu)
    assert is_dominant(d) and sorted(x.real for x in d) == sorted(x.real for x in mu)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.floats(-50, 50, allow_nan=False))
def test_complex_text_round_trip(re, im):
    z = complex(re, im)
    assert parse_complex(format_complex(z)) == z


def test_parse_complex_accepts_i_and_rejects_garbage():
    assert parse_complex("0.5+2i") == 0.5 + 2j
    assert parse_complex(" -1 - 3j ") == -1 - 3j
    with pytest.raises(ValueError):
        parse_complex("abc")


def test_counts_used_by_normalization():
    assert coset_count(3, 2, 2) == 35
