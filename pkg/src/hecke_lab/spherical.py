"""p-adic spherical functions, spherical transforms and Hecke eigenvalues.

Every transform is a finite character sum over Hermite normal form coset
representatives: for a left-K-invariant ``h`` the spherical function can be
folded away, and ``a(b)`` of an upper-triangular representative ``b`` is its
diagonal. Characters use ``|p^v|_p = p^-v``.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .hecke_enum import (
    Partition,
    compositions,
    coset_count,
    cosets_with_valuations,
    double_coset_size,
    valuation_partition_table,
)

NORMALIZED_TOL = 1e-12
SPHERICAL_BOUND = 3.0


@dataclass(frozen=True)
class SpectralParam:
    mu: tuple[complex, ...]
    normalized: bool = field(init=False)

    def __post_init__(self):
        mu = tuple(complex(x) for x in self.mu)
        if not all(cmath.isfinite(x) for x in mu):
            raise ValueError("spectral parameter must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "normalized", abs(sum(mu)) < NORMALIZED_TOL)

    @property
    def n(self) -> int:
        return len(self.mu)

    def __iter__(self):
        return iter(self.mu)

    def __len__(self):
        return len(self.mu)


MuLike = SpectralParam | Sequence[complex]


def _mu(mu: MuLike) -> tuple[complex, ...]:
    return mu.mu if isinstance(mu, SpectralParam) else tuple(complex(x) for x in mu)


def parse_complex(text: str) -> complex:
    """Parse ``"re+imj"``; ``i`` is accepted in place of ``j``."""
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ValueError(f"malformed complex number: {text!r}") from None


def format_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{abs(z.imag)!r}j"


def rho(n: int) -> tuple[Fraction, ...]:
    """Half sum of positive roots, ``((n-1)/2, (n-3)/2, ..., -(n-1)/2)``."""
    return tuple(Fraction(n - 1 - 2 * i, 2) for i in range(n))


def theta(mu: MuLike) -> float:
    return max(abs(x.real) for x in _mu(mu))


def to_dominant(mu: MuLike) -> SpectralParam:
    """Weyl-permute so that real parts are non-increasing."""
    return SpectralParam(tuple(sorted(_mu(mu), key=lambda x: -x.real)))


def is_dominant(mu: MuLike) -> bool:
    re = [x.real for x in _mu(mu)]
    return all(a >= b for a, b in zip(re, re[1:]))


def _shifted(mu: MuLike) -> tuple[complex, ...]:
    m = _mu(mu)
    return tuple(x + float(r) for x, r in zip(m, rho(len(m))))


def chi(mu: MuLike, diag_valuations: Sequence[int], p: int) -> complex:
    """``prod_i |p^{v_i}|_p^{mu_i} = p^{-sum v_i mu_i}``."""
    m = _mu(mu)
    if len(m) != len(diag_valuations):
        raise ValueError("length mismatch between mu and valuations")
    exponent = -math.log(p) * sum(v * x for v, x in zip(diag_valuations, m))
    return cmath.exp(exponent)


def _check_n(n: int, mu: tuple) -> None:
    if len(mu) != n:
        raise ValueError(f"mu has {len(mu)} entries, expected {n}")


def spherical_transform_h(n: int, p: int, l: int, mu: MuLike) -> complex:
    """Spherical transform of the normalized indicator of ``M(p^l)``.

    The coset sum is grouped by diagonal valuations; every representative
    with the same diagonal contributes the same character value.
    """
    m = _mu(mu)
    _check_n(n, m)
    shifted = _shifted(m)
    total = 0j
    for v in compositions(n, l):
        total += cosets_with_valuations(p, v) * chi(shifted, v, p)
    return total / coset_count(n, p, l)


def hecke_eigenvalue_lambda(n: int, p: int, l: int, mu: MuLike) -> complex:
    return spherical_transform_h(n, p, l, mu) * coset_count(n, p, l) * p ** (-l * (n - 1) / 2)


def satake_parameters(p: int, mu: MuLike) -> tuple[complex, ...]:
    """``alpha_i = p^{-mu_i}``: the convention that matches the coset sum."""
    return tuple(cmath.exp(-math.log(p) * x) for x in _mu(mu))


def complete_homogeneous(l: int, alphas: Sequence[complex]) -> complex:
    """``h_l(alphas)`` as an explicit sum over all degree-l monomials."""
    logs = [cmath.log(a) for a in alphas]
    total = 0j
    for idx in itertools.combinations_with_replacement(range(len(alphas)), l):
        total += cmath.exp(sum(logs[i] for i in idx))
    return total


def symmetric_oracle(n: int, p: int, l: int, mu: MuLike) -> complex:
    """Independent Satake-side value of the normalized eigenvalue."""
    m = _mu(mu)
    _check_n(n, m)
    logp = math.log(p)
    total = 0j
    for idx in itertools.combinations_with_replacement(range(n), l):
        total += cmath.exp(-logp * sum(m[i] for i in idx))
    return total


def spherical_function(n: int, p: int, partition: Partition | Sequence[int], mu: MuLike) -> complex:
    """``eta_mu(diag(p^{l_1},...,p^{l_n}))`` as a character average over one double coset."""
    part = partition if isinstance(partition, Partition) else Partition(tuple(partition))
    m = _mu(mu)
    _check_n(n, m)
    if len(part) != n:
        raise ValueError("partition length must equal n")
    shifted = _shifted(m)
    table = valuation_partition_table(n, p, part.weight)
    total = 0j
    size = 0
    for (v, q), count in sorted(table.items(), key=lambda kv: (kv[0][0], kv[0][1].parts), reverse=True):
        if q == part:
            total += count * chi(shifted, v, p)
            size += count
    return total / size


def partition_decomposition(n: int, p: int, l: int, mu: MuLike) -> complex:
    """Sum of double-coset-weighted spherical functions over weight-l partitions."""
    total_count = coset_count(n, p, l)
    table = valuation_partition_table(n, p, l)
    parts = sorted({q for _, q in table}, key=lambda q: q.parts)
    return sum(
        double_coset_size(n, p, q) / total_count * spherical_function(n, p, q, mu) for q in parts
    )


@dataclass
class SphericalBoundReport:
    n: int
    p: int
    mu: tuple[complex, ...]
    delta: float
    bound: float
    ratios: dict[tuple[int, ...], float]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios.values())

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "mu": [format_complex(x) for x in self.mu],
            "delta": self.delta,
            "bound": self.bound,
            "ratios": [{"partition": list(k), "ratio": v} for k, v in self.ratios.items()],
            "max_ratio": self.max_ratio,
            "passed": self.passed,
        }


def spherical_bound_ratio(n: int, p: int, partition: Partition | Sequence[int], mu: MuLike, delta: float) -> float:
    """``|eta_mu(a)| / chi_{-rho(1-delta) + Re mu}(a)`` for dominant mu."""
    m = _mu(mu)
    if not is_dominant(m):
        raise ValueError("mu must be dominant; apply to_dominant first")
    parts = tuple(partition)
    r = rho(n)
    exponent = -math.log(p) * sum(li * (-float(ri) * (1 - delta) + x.real) for li, ri, x in zip(parts, r, m))
    return abs(spherical_function(n, p, parts, m)) / math.exp(exponent)


def check_spherical_bound(
    n: int,
    p: int,
    partition: Partition | Sequence[int] | Iterable[Sequence[int]],
    mu: MuLike,
    delta: float,
    bound: float = SPHERICAL_BOUND,
) -> SphericalBoundReport:
    """Evaluate the spherical-function bound over one partition or a sweep of them."""
    items = list(partition)
    if items and isinstance(items[0], int):
        sweep = [tuple(items)]
    else:
        sweep = [tuple(q) for q in items]
    m = _mu(mu)
    ratios = {q: spherical_bound_ratio(n, p, q, m, delta) for q in sweep}
    return SphericalBoundReport(n, p, m, delta, bound, ratios)
