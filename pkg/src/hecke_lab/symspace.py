"""The symmetric space SL_n(R)/SO_n(R) as determinant-one SPD matrices.

A coset ``gK`` is the matrix ``Y = g g^T``. Distances use the trace form
``<A, B> = tr(AB)`` on the tangent space, so ``d(I, exp S) = ||S||_F``. For
n = 2 the point ``z = x + iy`` of the upper half plane corresponds to
``Y = (1/y) [[x^2 + y^2, x], [x, 1]]`` and ``d = sqrt(2) * d_hyperbolic``.

Integer matrices act on the quotient by ``Y -> U^T Y U``; for n = 2 this is
the Moebius map of ``U^T``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._lll import lll_gram_batch

DET_TOL = 1e-9
DOMAIN_TOL = 1e-9
LLL_DELTA = 0.99
MAX_REDUCTION_STEPS = 10**4


class ReductionError(RuntimeError):
    """Reduction did not converge within the step cap (usually deep in a cusp)."""


@dataclass(frozen=True, eq=False)
class SymPoint:
    Y: np.ndarray

    def __post_init__(self):
        y = np.array(self.Y, dtype=float)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError("Y must be a square matrix")
        if not np.allclose(y, y.T, atol=1e-9, rtol=1e-9):
            raise ValueError("Y must be symmetric")
        y = (y + y.T) / 2
        try:
            np.linalg.cholesky(y)
        except np.linalg.LinAlgError:
            raise ValueError("Y must be positive definite") from None
        if abs(np.linalg.det(y) - 1) > DET_TOL:
            raise ValueError(f"det(Y) = {np.linalg.det(y)!r} is not 1")
        y.setflags(write=False)
        object.__setattr__(self, "Y", y)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def to_list(self) -> list[list[str]]:
        return [[f"{x:.17g}" for x in row] for row in self.Y]

    def __repr__(self):
        return f"SymPoint({self.Y.tolist()!r})"


@dataclass(frozen=True, eq=False)
class ReducedPoint:
    Y: SymPoint
    reducer: np.ndarray  # integer, det +1, reducer^T @ original @ reducer == Y


def _normalize(y: np.ndarray) -> np.ndarray:
    y = (y + np.swapaxes(y, -1, -2)) / 2
    n = y.shape[-1]
    d = np.linalg.det(y)
    return y / (d ** (1.0 / n))[..., None, None]


def _as_float_matrix(g) -> np.ndarray:
    if isinstance(g, np.ndarray):
        return g.astype(float)
    return np.array([[float(Fraction(x)) if isinstance(x, str) else float(x) for x in row] for row in g])


def from_group(g) -> SymPoint:
    g = _as_float_matrix(g)
    if abs(abs(np.linalg.det(g)) - 1) > DET_TOL:
        raise ValueError("g must have determinant +-1")
    return SymPoint(_normalize(g @ g.T))


def distance(X: SymPoint | np.ndarray, Y: SymPoint | np.ndarray) -> float:
    """Geodesic distance: ``sqrt(sum log^2 lambda_i)`` over eigenvalues of ``X^-1 Y``."""
    return float(distances(_arr(X), _arr(Y)[None])[0])


def _arr(X) -> np.ndarray:
    return X.Y if isinstance(X, SymPoint) else np.asarray(X, dtype=float)


def distances(X: np.ndarray, Ys: np.ndarray) -> np.ndarray:
    """Distances from one point ``X`` to a stack ``Ys`` of shape (m, n, n)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        raise ValueError("X is not positive definite") from None
    Linv = np.linalg.inv(L)
    M = Linv @ Ys @ Linv.T
    w = np.linalg.eigvalsh(M)
    if np.any(w <= 0):
        raise ValueError("Y is not positive definite")
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def pair_distances(Xs: np.ndarray, Ys: np.ndarray) -> np.ndarray:
    """Row-wise distances between two stacks of the same shape."""
    L = np.linalg.cholesky(Xs)
    Linv = np.linalg.inv(L)
    M = Linv @ Ys @ np.swapaxes(Linv, -1, -2)
    w = np.linalg.eigvalsh(M)
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def act(gamma, X: SymPoint) -> SymPoint:
    """Projective action ``gamma X gamma^T`` rescaled to determinant one."""
    g = _as_float_matrix(gamma)
    if abs(np.linalg.det(g)) < 1e-300:
        raise ValueError("gamma is singular")
    return SymPoint(_normalize(g @ X.Y @ g.T))


def act_batch(gammas: np.ndarray, X: np.ndarray) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    return _normalize(g @ X @ np.swapaxes(g, -1, -2))


def to_half_plane(Y) -> complex:
    y = _arr(Y)
    if y.shape != (2, 2):
        raise ValueError("half-plane coordinates exist only for n = 2")
    im = 1.0 / y[1, 1]
    return complex(y[0, 1] * im, im)


def from_half_plane(z: complex) -> SymPoint:
    return SymPoint(half_plane_matrices(np.array([z]))[0])


def half_plane_matrices(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    out = np.empty(z.shape + (2, 2))
    out[..., 0, 0] = (x * x + y * y) / y
    out[..., 0, 1] = out[..., 1, 0] = x / y
    out[..., 1, 1] = 1 / y
    return out


def half_plane_coords(Ys: np.ndarray) -> np.ndarray:
    im = 1.0 / Ys[..., 1, 1]
    return Ys[..., 0, 1] * im + 1j * im


def in_modular_domain(z: complex, tol: float = DOMAIN_TOL) -> bool:
    return abs(z.real) <= 0.5 + tol and abs(z) >= 1 - tol


def gauss_reduce(z: np.ndarray, max_steps: int = MAX_REDUCTION_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Reduce half-plane points into ``|Re z| <= 1/2, |z| >= 1``.

    Returns the reduced points and integer matrices ``M`` (shape (m, 2, 2))
    with ``z' = M . z`` as a Moebius map.
    """
    z = np.array(z, dtype=complex).reshape(-1)
    m = z.shape[0]
    M = np.zeros((m, 2, 2), dtype=np.int64)
    M[:, 0, 0] = M[:, 1, 1] = 1
    active = np.ones(m, dtype=bool)
    for _ in range(max_steps):
        if not active.any():
            return z, M
        idx = np.nonzero(active)[0]
        w = z[idx]
        shift = np.floor(w.real + 0.5)
        w = w - shift
        s = shift.astype(np.int64)
        # M <- [[1, -s], [0, 1]] @ M
        M[idx, 0, :] -= s[:, None] * M[idx, 1, :]
        inside = np.abs(w) >= 1
        flip = ~inside
        w[flip] = -1 / w[flip]
        fi = idx[flip]
        # M <- [[0, -1], [1, 0]] @ M
        top = M[fi, 0, :].copy()
        M[fi, 0, :] = -M[fi, 1, :]
        M[fi, 1, :] = top
        z[idx] = w
        active[idx[inside]] = False
    raise ReductionError(f"Gauss reduction did not finish in {max_steps} steps")


def lll_reduce_batch(Ys: np.ndarray, delta: float = LLL_DELTA,
                     max_steps: int = MAX_REDUCTION_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce a stack of Gram matrices; returns ``(U^T Y U, U)`` with det U = +1."""
    Ys = np.ascontiguousarray(Ys, dtype=float)
    G, U, status = lll_gram_batch(Ys, delta, max_steps)
    U = np.rint(U).astype(np.int64)
    if np.any(status != 0):
        raise ReductionError(f"LLL did not finish in {max_steps} steps")
    n = Ys.shape[-1]
    neg = np.round(np.linalg.det(U)) < 0
    if neg.any():
        if n % 2:
            U[neg] = -U[neg]
        else:
            U[neg, :, 0] = -U[neg, :, 0]
            G[neg, 0, 1:] = -G[neg, 0, 1:]
            G[neg, 1:, 0] = -G[neg, 1:, 0]
    return G, U


def reduce_batch(Ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a stack of points; returns ``(Y_reduced, U)`` with ``U^T Y U = Y_reduced``."""
    Ys = np.asarray(Ys, dtype=float)
    if Ys.shape[-1] == 2:
        z, M = gauss_reduce(half_plane_coords(Ys))
        return half_plane_matrices(z), np.swapaxes(M, -1, -2).copy()
    G, U = lll_reduce_batch(Ys)
    return _normalize(G), U


def reduce(X: SymPoint) -> ReducedPoint:
    Y, U = reduce_batch(X.Y[None])
    return ReducedPoint(SymPoint(Y[0]), U[0])


@lru_cache(maxsize=None)
def neighbor_set(n: int) -> np.ndarray:
    """Short unimodular matrices used to search across fundamental-domain faces.

    n = 2: all words of length <= 3 in S, T, T^-1 (up to sign), as
    ``U = M^T``. n >= 3: products ``D P E`` of a sign matrix, a permutation
    and the identity or one elementary matrix ``I +- E_ij``, with det +1.
    The set contains the identity first and is closed under inversion.
    """
    if n == 2:
        S = np.array([[0, -1], [1, 0]])
        T = np.array([[1, 1], [0, 1]])
        Ti = np.array([[1, -1], [0, 1]])
        words = [np.eye(2, dtype=np.int64)]
        frontier = [np.eye(2, dtype=np.int64)]
        for _ in range(3):
            frontier = [g @ h for g in frontier for h in (S, T, Ti)]
            words.extend(frontier)
        mats = [w.T for w in words]
    else:
        signs = [np.diag(s) for s in itertools.product((1, -1), repeat=n)]
        perms = [np.eye(n, dtype=np.int64)[list(q)] for q in itertools.permutations(range(n))]
        elems = [np.eye(n, dtype=np.int64)]
        for i in range(n):
            for j in range(n):
                if i != j:
                    for s in (1, -1):
                        e = np.eye(n, dtype=np.int64)
                        e[i, j] = s
                        elems.append(e)
        mats = [d @ q @ e for d in signs for q in perms for e in elems]
        mats = [m for m in mats if round(np.linalg.det(m)) == 1]
    mats = mats + [np.round(np.linalg.inv(m)).astype(np.int64) for m in mats]
    seen: dict[tuple, np.ndarray] = {}
    for m in mats:
        key = tuple(m.ravel())
        neg = tuple((-m).ravel())
        # U and -U act identically
        if key not in seen and neg not in seen:
            seen[key] = m.astype(np.int64)
    return np.array(list(seen.values()))


def neighbor_images(Y: np.ndarray) -> np.ndarray:
    """All ``U^T Y U`` for U in the neighbor set."""
    U = neighbor_set(Y.shape[-1]).astype(float)
    return np.swapaxes(U, -1, -2) @ Y @ U


def dist_in_X(X: SymPoint, Y: SymPoint) -> float:
    """Upper bound on the distance between the images of X and Y in the quotient."""
    x = reduce(X).Y.Y
    y = reduce(Y).Y.Y
    return float(distances(x, neighbor_images(y)).min())


# exp-coordinates


def sym_log_coords(Ys: np.ndarray) -> np.ndarray:
    """Frobenius-isometric coordinates of ``log Y``: diagonal, then sqrt(2) * upper."""
    w, V = np.linalg.eigh(Ys)
    S = (V * np.log(w)[..., None, :]) @ np.swapaxes(V, -1, -2)
    n = Ys.shape[-1]
    iu = np.triu_indices(n, 1)
    diag = np.diagonal(S, axis1=-2, axis2=-1)
    return np.concatenate([diag, math.sqrt(2) * S[..., iu[0], iu[1]]], axis=-1)


def traceless_basis(n: int) -> np.ndarray:
    """Orthonormal basis (trace form) of traceless symmetric n x n matrices."""
    basis = []
    for k in range(1, n):
        v = np.zeros(n)
        v[:k] = 1
        v[k] = -k
        basis.append(np.diag(v / np.linalg.norm(v)))
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1 / math.sqrt(2)
            basis.append(e)
    return np.array(basis)


def dimension(n: int) -> int:
    return (n + 2) * (n - 1) // 2


def exp_jacobian(eigs: np.ndarray) -> np.ndarray:
    """Volume density of the exponential chart at I, given eigenvalues of log Y."""
    n = eigs.shape[-1]
    out = np.ones(eigs.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            t = np.abs(eigs[..., i] - eigs[..., j]) / 2
            safe = np.where(t > 1e-12, t, 1.0)
            out = out * np.where(t > 1e-12, np.sinh(safe) / safe, 1.0)
    return out


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    samples: int


def ball_volume_estimate(n: int, epsilon: float, samples: int, seed: int = 0) -> VolumeEstimate:
    """Monte Carlo invariant volume of ``{Y : d(I, Y) <= epsilon}``.

    n = 2 integrates the polar density ``sqrt(2) sinh(r / sqrt(2))`` with r
    uniform on [0, epsilon]. n >= 3 samples the exp-chart bounding box
    ``[-eps, eps]^d`` and weights accepted points by the chart Jacobian.
    """
    if epsilon < 0 or epsilon > 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if epsilon == 0:
        return VolumeEstimate(0.0, 0.0, samples)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n])))
    if n == 2:
        r = rng.uniform(0, epsilon, samples)
        f = 2 * math.pi * epsilon * math.sqrt(2) * np.sinh(r / math.sqrt(2))
    else:
        d = dimension(n)
        c = rng.uniform(-epsilon, epsilon, (samples, d))
        inside = np.einsum("ij,ij->i", c, c) <= epsilon**2
        S = np.einsum("ik,kab->iab", c[inside], traceless_basis(n))
        eigs = np.linalg.eigvalsh(S)
        f = np.zeros(samples)
        f[inside] = (2 * epsilon) ** d * exp_jacobian(eigs)
    return VolumeEstimate(float(f.mean()), float(f.std(ddof=1) / math.sqrt(samples)), samples)


def ball_volume_exact_n2(epsilon: float) -> float:
    """Closed form for n = 2: ``8 pi sinh^2(eps / (2 sqrt 2))``."""
    return 8 * math.pi * math.sinh(epsilon / (2 * math.sqrt(2))) ** 2


def loglog_slope(epsilons: Sequence[float], volumes: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(epsilons), np.log(volumes), 1)
    return float(slope)
