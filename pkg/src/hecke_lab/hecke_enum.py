"""Hecke coset representatives for integer matrices of determinant p^l.

Left cosets ``gamma K`` are indexed by column-lattice Hermite normal forms:
upper-triangular matrices with diagonal ``p^v`` and entry ``(i, j)`` reduced
modulo ``p^{v_i}``. Right cosets ``Gamma gamma`` (used to build orbits) are
their transposes.

Enumeration order: diagonal valuation tuples in descending lexicographic
order, then the strictly-upper entries in row-major lexicographic order.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import IO, Iterable, Iterator, Sequence

from .exact_linalg import IntMatrix, as_int_matrix, snf, transpose

DEFAULT_CAP = 10**7


class CapExceededError(RuntimeError):
    """Raised when an enumeration would produce more than ``cap`` items."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} representatives exceed the cap of {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if any(x < 0 for x in parts) or any(a > b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition must be non-negative and weakly increasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)


@dataclass(frozen=True)
class CosetRep:
    matrix: IntMatrix
    p: int
    l: int
    diag_valuations: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.matrix)


@dataclass
class OrbitRepSet:
    n: int
    p: int
    l: int
    reps: list[IntMatrix] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.reps)


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p**0.5) + 1))


def _check_args(n: int, p: int, l: int) -> None:
    if n < 1:
        raise ValueError("n must be positive")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if l < 0:
        raise ValueError("l must be non-negative")


def compositions(n: int, l: int) -> Iterator[tuple[int, ...]]:
    """Non-negative integer n-tuples summing to l, descending lexicographic."""
    if n == 1:
        yield (l,)
        return
    for first in range(l, -1, -1):
        for rest in compositions(n - 1, l - first):
            yield (first,) + rest


def cosets_with_valuations(p: int, v: Sequence[int]) -> int:
    """Number of HNF representatives whose diagonal is ``p^v``."""
    n = len(v)
    return p ** sum(vi * (n - 1 - i) for i, vi in enumerate(v))


def coset_count(n: int, p: int, l: int) -> int:
    _check_args(n, p, l)
    return sum(cosets_with_valuations(p, v) for v in compositions(n, l))


def _guard(n: int, p: int, l: int, cap: int | None) -> None:
    cap = DEFAULT_CAP if cap is None else cap
    total = coset_count(n, p, l)
    if total > cap:
        raise CapExceededError(total, cap)


def iter_cosets(n: int, p: int, l: int, cap: int | None = None) -> Iterator[CosetRep]:
    _check_args(n, p, l)
    _guard(n, p, l, cap)
    slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for v in compositions(n, l):
        d = [p**vi for vi in v]
        ranges = [range(d[i]) for i, _ in slots]
        for entries in itertools.product(*ranges):
            rows = [[0] * n for _ in range(n)]
            for i in range(n):
                rows[i][i] = d[i]
            for (i, j), x in zip(slots, entries):
                rows[i][j] = x
            yield CosetRep(tuple(map(tuple, rows)), p, l, v)


def enumerate_cosets(n: int, p: int, l: int, cap: int | None = None) -> list[CosetRep]:
    """One HNF representative per left coset ``gamma K`` in ``M(p^l)``."""
    return list(iter_cosets(n, p, l, cap))


def valuation(x: int, p: int) -> int:
    x = abs(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def partition_of(rep: CosetRep | Sequence[Sequence[int]], p: int | None = None) -> Partition:
    """Double coset label: valuations of the elementary divisors, increasing."""
    if isinstance(rep, CosetRep):
        matrix, p = rep.matrix, rep.p
    else:
        matrix = as_int_matrix(rep)
        if p is None:
            raise ValueError("p is required for a bare matrix")
    divisors = snf(matrix)
    for d in divisors:
        rest = d
        while rest % p == 0:
            rest //= p
        if rest != 1:
            raise ValueError(f"elementary divisor {d} is not a power of {p}")
    return Partition(tuple(valuation(d, p) for d in divisors))


def partitions(n: int, l: int) -> list[Partition]:
    """Weakly increasing non-negative n-tuples of weight l."""
    out = []

    def rec(prefix: tuple[int, ...], lo: int, left: int):
        k = n - len(prefix)
        if k == 1:
            if left >= lo:
                out.append(Partition(prefix + (left,)))
            return
        for x in range(lo, left // k + 1):
            rec(prefix + (x,), x, left - x)

    rec((), 0, l)
    return out


@lru_cache(maxsize=256)
def valuation_partition_table(n: int, p: int, l: int, cap: int | None = None) -> dict:
    """Counts of representatives keyed by ``(diag_valuations, partition)``."""
    table: Counter = Counter()
    for rep in iter_cosets(n, p, l, cap):
        table[(rep.diag_valuations, partition_of(rep))] += 1
    return dict(table)


def partition_buckets(n: int, p: int, l: int, cap: int | None = None) -> dict[Partition, int]:
    buckets: Counter = Counter()
    for (_, part), c in valuation_partition_table(n, p, l, cap).items():
        buckets[part] += c
    return {part: buckets[part] for part in sorted(buckets, key=lambda q: q.parts)}


def double_coset_size(n: int, p: int, partition: Partition | Sequence[int], cap: int | None = None) -> int:
    """Number of left K-cosets in ``K diag(p^{l_1},...,p^{l_n}) K``."""
    part = partition if isinstance(partition, Partition) else Partition(tuple(partition))
    if len(part) != n:
        raise ValueError("partition length must equal n")
    return partition_buckets(n, p, part.weight, cap).get(part, 0)


def double_coset_exponent(partition: Partition | Sequence[int]) -> int:
    """Exponent e with ``double_coset_size`` comparable to ``p^e``.

    Pairs the increasing parts against ``2i - n - 1`` (1-based i).
    """
    parts = tuple(partition)
    n = len(parts)
    return sum(li * (2 * i - n - 1) for i, li in enumerate(parts, start=1))


def enumerate_orbit_reps(n: int, p: int, l: int, cap: int | None = None) -> OrbitRepSet:
    """Representatives of ``R(1) \\ R(p^l)``: transposes of the HNF cosets."""
    reps = [transpose(rep.matrix) for rep in iter_cosets(n, p, l, cap)]
    return OrbitRepSet(n, p, l, reps)


def height(g: Sequence[Sequence], p: int) -> int:
    """Smallest k >= 0 with ``p^k g`` integral.

    Entries may be numbers or strings like ``"1/4"``. Denominators
    must be powers of p.
    """
    k = 0
    for row in g:
        for x in row:
            q = Fraction(x)
            den = q.denominator
            e = 0
            while den % p == 0:
                den //= p
                e += 1
            if den != 1:
                raise ValueError(f"denominator of {q} is not a power of {p}")
            k = max(k, e)
    return k


def rep_record(matrix: IntMatrix, p: int, l: int, partition: Partition | None = None) -> dict:
    if partition is None:
        partition = partition_of(matrix, p)
    return {
        "n": len(matrix),
        "p": p,
        "l": l,
        "matrix": [str(x) for row in matrix for x in row],
        "partition": list(partition.parts),
    }


def record_matrix(record: dict) -> IntMatrix:
    n = record["n"]
    flat = [int(x) for x in record["matrix"]]
    return tuple(tuple(flat[i * n:(i + 1) * n]) for i in range(n))


def write_jsonl(reps: Iterable[CosetRep], stream: IO[str]) -> int:
    count = 0
    for rep in reps:
        stream.write(json.dumps(rep_record(rep.matrix, rep.p, rep.l, partition_of(rep))))
        stream.write("\n")
        count += 1
    return count
