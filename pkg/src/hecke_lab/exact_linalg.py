"""Exact integer matrix algebra: determinants plus Hermite and Smith normal forms.

Matrices are plain tuples of tuples of Python ints. Every routine here is
fraction-free, so entries never leave the integers.
"""

from __future__ import annotations

from math import gcd
from typing import Sequence

IntMatrix = tuple[tuple[int, ...], ...]


class SingularMatrixError(ValueError):
    pass


def as_int_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    m = tuple(tuple(int(x) for x in row) for row in rows)
    n = len(m)
    if n == 0 or any(len(row) != n for row in m):
        raise ValueError("expected a non-empty square matrix")
    return m


def identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def diag(entries: Sequence[int]) -> IntMatrix:
    n = len(entries)
    return tuple(tuple(int(entries[i]) if i == j else 0 for j in range(n)) for i in range(n))


def transpose(m: IntMatrix) -> IntMatrix:
    return tuple(zip(*m))


def matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def det(m: Sequence[Sequence[int]]) -> int:
    """Exact determinant by Bareiss fraction-free elimination."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("det needs a square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                # exact by Sylvester's identity
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def hnf_column(m: Sequence[Sequence[int]]) -> IntMatrix:
    """Hermite normal form of the column lattice of ``m``.

    Returns the unique upper-triangular ``H = m @ U`` (``U`` unimodular) with
    positive diagonal ``d`` and ``0 <= H[i][j] < d[i]`` for ``j > i``. Two
    nonsingular matrices span the same column lattice iff their HNFs agree.
    """
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("hnf_column needs a square matrix")
    for i in range(n - 1, -1, -1):
        # clear row i in columns 0..i-1 by column gcd steps, pivot into column i
        for j in range(i):
            x, y = a[i][j], a[i][i]
            if x == 0:
                continue
            g, s, t = _xgcd(y, x)
            # [col_i, col_j] <- [s*col_i + t*col_j, -(x/g)*col_i + (y/g)*col_j], det 1
            u, v = x // g, y // g
            for r in range(n):
                ci, cj = a[r][i], a[r][j]
                a[r][i] = s * ci + t * cj
                a[r][j] = -u * ci + v * cj
        if a[i][i] == 0:
            raise SingularMatrixError("matrix is singular")
        if a[i][i] < 0:
            for r in range(n):
                a[r][i] = -a[r][i]
    for i in range(n - 1, -1, -1):
        d = a[i][i]
        for j in range(i + 1, n):
            q = a[i][j] // d
            if q:
                for r in range(i + 1):
                    a[r][j] -= q * a[r][i]
    return tuple(tuple(row) for row in a)


def snf(m: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Elementary divisors ``d1 | d2 | ... | dn`` of a nonsingular matrix."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("snf needs a square matrix")
    for t in range(n):
        pivot = _smallest_nonzero(a, t)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        while True:
            r, c = pivot
            a[t], a[r] = a[r], a[t]
            for row in a:
                row[t], row[c] = row[c], row[t]
            p = a[t][t]
            clean = True
            for i in range(t + 1, n):
                q = a[i][t] // p
                if q:
                    ri, rt = a[i], a[t]
                    for j in range(t, n):
                        ri[j] -= q * rt[j]
                if a[i][t]:
                    clean = False
            for j in range(t + 1, n):
                q = a[t][j] // p
                if q:
                    for i in range(t, n):
                        a[i][j] -= q * a[i][t]
                if a[t][j]:
                    clean = False
            if clean:
                # pivot must divide the remaining block, otherwise fold a row in
                bad = next(
                    (i for i in range(t + 1, n) for j in range(t + 1, n) if a[i][j] % p),
                    None,
                )
                if bad is None:
                    break
                rt, rb = a[t], a[bad]
                for j in range(t, n):
                    rt[j] += rb[j]
            pivot = _smallest_nonzero(a, t)
    return tuple(abs(a[i][i]) for i in range(n))


def _smallest_nonzero(a: list[list[int]], t: int) -> tuple[int, int] | None:
    best = None
    best_val = 0
    n = len(a)
    for i in range(t, n):
        row = a[i]
        for j in range(t, n):
            v = abs(row[j])
            if v and (best is None or v < best_val):
                best, best_val = (i, j), v
                if v == 1:
                    return best
    return best


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b = g = gcd(a, b) >= 0``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        return -a, -s0, -t0
    return a, s0, t0


def content(m: Sequence[Sequence[int]]) -> int:
    """gcd of all entries."""
    g = 0
    for row in m:
        for x in row:
            g = gcd(g, int(x))
    return g
