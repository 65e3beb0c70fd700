"""Hecke orbit clouds around a basepoint and Monte Carlo coverage of the quotient."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .hecke_enum import DEFAULT_CAP, CapExceededError, compositions, coset_count, cosets_with_valuations
from .symspace import (
    ReducedPoint,
    SymPoint,
    act_batch,
    dist_in_X,
    half_plane_coords,
    half_plane_matrices,
    neighbor_set,
    pair_distances,
    reduce_batch,
    sym_log_coords,
)

DEDUPE_TOL = 1e-8
BLOCK = 1024
RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class Region:
    """Compact sampling region in Iwasawa coordinates.

    n = 2: the standard modular domain cut at ``y <= y_max``.
    n >= 3: ``|x_ij| <= x_bound`` for the unipotent part and
    ``root_min <= log(d_i / d_{i+1}) <= root_max`` for the diagonal part.
    """

    n: int
    y_max: float = 2.0
    x_bound: float = 0.5
    root_min: float = math.log(3 / 4)
    root_max: float = 1.0

    def __post_init__(self):
        if self.n == 2:
            if not self.y_max > 1:
                raise ValueError("empty region: y_max must exceed 1")
        elif self.n >= 3:
            if not (self.root_max > self.root_min and self.x_bound > 0):
                raise ValueError("empty region")
        else:
            raise ValueError("n must be at least 2")

    def describe(self) -> dict:
        if self.n == 2:
            return {"kind": "modular-domain", "y_max": self.y_max}
        return {
            "kind": "iwasawa-box",
            "x_bound": self.x_bound,
            "root_min": self.root_min,
            "root_max": self.root_max,
        }


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of samples."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _truncated_exponential(rng, rate: float, lo: float, hi: float, size) -> np.ndarray:
    u = rng.uniform(size=size)
    if rate == 0:
        return lo + (hi - lo) * u
    # inverse CDF of density ~ exp(-rate * r) on [lo, hi]
    a, b = math.exp(-rate * lo), math.exp(-rate * hi)
    return -np.log(a - u * (a - b)) / rate


def _sample_block(region: Region, count: int, rng) -> np.ndarray:
    n = region.n
    if n == 2:
        out = np.empty(0, dtype=complex)
        y_lo = math.sqrt(3) / 2
        while out.size < count:
            m = 2 * (count - out.size) + 16
            x = rng.uniform(-0.5, 0.5, m)
            # density 1/y^2 on [y_lo, y_max] via inverse CDF of 1/y
            u = rng.uniform(size=m)
            y = 1 / (1 / y_lo - u * (1 / y_lo - 1 / region.y_max))
            keep = x * x + y * y >= 1
            out = np.concatenate([out, (x + 1j * y)[keep]])
        return half_plane_matrices(out[:count])
    iu = np.triu_indices(n, 1)
    X = np.zeros((count, n, n))
    X[:, np.arange(n), np.arange(n)] = 1
    X[:, iu[0], iu[1]] = rng.uniform(-region.x_bound, region.x_bound, (count, len(iu[0])))
    roots = np.empty((count, n - 1))
    for k in range(1, n):
        rate = k * (n - k) / 2
        roots[:, k - 1] = _truncated_exponential(rng, rate, region.root_min, region.root_max, count)
    # log d_i from simple roots with sum zero
    t = np.zeros((count, n))
    t[:, 1:] = -np.cumsum(roots, axis=1)
    t -= t.mean(axis=1, keepdims=True)
    D = np.exp(t)
    Y = (X * D[:, None, :]) @ np.swapaxes(X, -1, -2)
    Yr, _ = reduce_batch(Y)
    return Yr


def sample_arrays(n: int, region: Region, count: int, seed: int) -> np.ndarray:
    if region.n != n:
        raise ValueError("region dimension does not match n")
    if count == 0:
        return np.zeros((0, n, n))
    blocks = []
    for b in range(math.ceil(count / BLOCK)):
        size = min(BLOCK, count - b * BLOCK)
        blocks.append(_sample_block(region, size, block_rng(seed, b)))
    return np.concatenate(blocks)


def sample_region(n: int, region: Region, count: int, seed: int) -> list[SymPoint]:
    """Reduced points drawn from the invariant measure restricted to ``region``."""
    return [SymPoint(y) for y in sample_arrays(n, region, count, seed)]


def orbit_rep_array(n: int, p: int, l: int, cap: int | None = None) -> np.ndarray:
    """Transposed HNF representatives as an int64 array, in enumeration order."""
    cap = DEFAULT_CAP if cap is None else cap
    total = coset_count(n, p, l)
    if total > cap:
        raise CapExceededError(total, cap)
    out = np.zeros((total, n, n), dtype=np.int64)
    slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pos = 0
    for v in compositions(n, l):
        size = cosets_with_valuations(p, v)
        block = out[pos:pos + size]
        for i in range(n):
            block[:, i, i] = p ** v[i]
        if slots:
            grids = np.indices([p ** v[i] for i, _ in slots]).reshape(len(slots), -1)
            for (i, j), col in zip(slots, grids):
                block[:, j, i] = col  # transpose of the upper HNF entry (i, j)
        pos += size
    return out


def content_valuation(mats: np.ndarray, p: int, limit: int) -> np.ndarray:
    """``min(v_p(content(A)), limit)`` for each matrix in the stack."""
    out = np.zeros(mats.shape[0], dtype=np.int64)
    flat = mats.reshape(mats.shape[0], -1)
    q = 1
    for j in range(1, limit + 1):
        q *= p
        out += np.all(flat % q == 0, axis=1)
    return out


@dataclass
class OrbitCloud:
    n: int
    p: int
    k: int
    basepoint: SymPoint
    ys: np.ndarray          # reduced points, shape (m, n, n)
    reducers: np.ndarray    # U with U^T (gamma x0 gamma^T) U = ys
    heights: np.ndarray     # minimal height of gamma reaching each point
    dedupe_tolerance: float = DEDUPE_TOL
    _levels: dict | None = field(default=None, repr=False)

    def __len__(self):
        return self.ys.shape[0]

    @property
    def points(self) -> list[ReducedPoint]:
        return [ReducedPoint(SymPoint(y), u) for y, u in zip(self.ys, self.reducers)]

    def up_to_height(self, k: int) -> "OrbitCloud":
        keep = self.heights <= k
        return OrbitCloud(self.n, self.p, k, self.basepoint, self.ys[keep], self.reducers[keep],
                          self.heights[keep], self.dedupe_tolerance)

    def levels(self) -> dict[int, tuple[cKDTree, np.ndarray]]:
        """Per-height k-d trees over log coordinates, keyed by ascending height."""
        if self._levels is None:
            coords = sym_log_coords(self.ys)
            self._levels = {}
            for h in np.unique(self.heights):
                idx = np.nonzero(self.heights == h)[0]
                self._levels[int(h)] = (cKDTree(coords[idx]), self.ys[idx])
        return self._levels

    def to_csv(self) -> str:
        n = self.n
        cols = ["index", "height"] + [f"y{i}{j}" for i in range(n) for j in range(n)]
        if n == 2:
            cols += ["x", "y"]
        lines = [",".join(cols)]
        zs = half_plane_coords(self.ys) if n == 2 else None
        for idx, (y, h) in enumerate(zip(self.ys, self.heights)):
            row = [str(idx), str(int(h))] + [f"{v:.17g}" for v in y.ravel()]
            if zs is not None:
                row += [f"{zs[idx].real:.17g}", f"{zs[idx].imag:.17g}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _dedupe(coords: np.ndarray, heights: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Keep the first point of each tolerance cluster, carrying the minimal height."""
    m = coords.shape[0]
    pairs = cKDTree(coords).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(m), heights.copy()
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, labels = connected_components(graph, directed=False)
    first = np.full(labels.max() + 1, m, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(m))
    best = np.full(labels.max() + 1, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best, labels, heights)
    keep = np.unique(first)
    return keep, best[labels[keep]]


def orbit_points(x0: SymPoint, n: int, p: int, k: int, cap: int | None = None,
                 dedupe_tolerance: float = DEDUPE_TOL) -> OrbitCloud:
    """Reduced, deduplicated images of ``x0`` under ``R(1) \\ R(p^{nk})``."""
    if x0.n != n:
        raise ValueError("basepoint dimension does not match n")
    reps = orbit_rep_array(n, p, n * k, cap)
    heights = k - content_valuation(reps, p, k)
    ys = act_batch(reps.astype(float), x0.Y)
    yr, U = reduce_batch(ys)
    keep, h = _dedupe(sym_log_coords(yr), heights, dedupe_tolerance)
    return OrbitCloud(n, p, k, x0, yr[keep], U[keep], h, dedupe_tolerance)


def _any_within(tree: cKDTree, ys: np.ndarray, coords: np.ndarray, images: np.ndarray,
                epsilon: float) -> np.ndarray:
    """Per image: is some tree point within geodesic distance epsilon?

    Log-coordinate distance never exceeds geodesic distance, so the k nearest
    neighbors inside the log ball are exact-checked, widening k only for
    images whose candidate list was saturated without a hit.
    """
    hit = np.zeros(coords.shape[0], dtype=bool)
    size = tree.n
    radius = epsilon * (1 + RADIUS_SLACK) + RADIUS_SLACK
    active = np.arange(coords.shape[0])
    kq = 4
    while active.size:
        kq = min(kq, size)
        _, idx = tree.query(coords[active], k=kq, distance_upper_bound=radius)
        idx = idx.reshape(active.size, kq)
        valid = idx < size
        rows, cols = np.nonzero(valid)
        if rows.size:
            d = pair_distances(images[active[rows]], ys[idx[rows, cols]])
            close = rows[d <= epsilon]
            hit[active[close]] = True
        if kq == size:
            break
        saturated = valid.all(axis=1) & ~hit[active]
        active = active[saturated]
        kq *= 4
    return hit


def needed_heights(cloud: OrbitCloud, xs: np.ndarray, epsilon: float) -> np.ndarray:
    """For each reduced sample, the least height of a cloud point within epsilon.

    Distances are searched over the neighbor set of each sample; samples with
    no point in range get ``inf``.
    """
    m = xs.shape[0]
    out = np.full(m, np.inf)
    if m == 0 or len(cloud) == 0 or epsilon <= 0:
        return out
    n = cloud.n
    U = neighbor_set(n).astype(float)
    nu = U.shape[0]
    images = (np.swapaxes(U, -1, -2)[None] @ xs[:, None] @ U[None]).reshape(-1, n, n)
    coords = sym_log_coords(images)
    pending = np.arange(m)
    for h, (tree, ys) in cloud.levels().items():
        if not pending.size:
            break
        rows = (pending[:, None] * nu + np.arange(nu)).ravel()
        hit = _any_within(tree, ys, coords[rows], images[rows], epsilon).reshape(-1, nu).any(axis=1)
        out[pending[hit]] = h
        pending = pending[~hit]
    return out


def needed_heights_blocked(cloud: OrbitCloud, xs: np.ndarray, epsilon: float, threads: int = 1) -> np.ndarray:
    chunks = [xs[i:i + BLOCK] for i in range(0, xs.shape[0], BLOCK)]
    cloud.levels()  # build once before fanning out
    if threads <= 1 or len(chunks) <= 1:
        parts = [needed_heights(cloud, c, epsilon) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: needed_heights(cloud, c, epsilon), chunks))
    return np.concatenate(parts) if parts else np.zeros(0)


def is_admissible(x: SymPoint, x0: SymPoint, epsilon: float, k: int, n: int, p: int,
                  cloud: OrbitCloud | None = None) -> bool:
    """Whether some gamma of determinant p^{nk} brings x0 within epsilon of x in the quotient."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if cloud is None:
        cloud = orbit_points(x0, n, p, k)
    elif cloud.k < k:
        raise ValueError("cloud is too shallow for this k")
    xr, _ = reduce_batch(x.Y[None])
    return bool(needed_heights(cloud, xr, epsilon)[0] <= k)


def is_admissible_bruteforce(x: SymPoint, cloud: OrbitCloud, epsilon: float, k: int) -> bool:
    """Linear scan with dist_in_X; reference for the indexed search."""
    for pt, h in zip(cloud.points, cloud.heights):
        if h <= k and dist_in_X(x, pt.Y) <= epsilon:
            return True
    return False


@dataclass
class SamplerConfig:
    region: Region
    samples: int = 4000
    seed: int = 0


@dataclass
class CoverageReport:
    n: int
    p: int
    k: int
    epsilon: float
    region: dict
    samples: int
    covered: int
    fraction: float
    stderr: float
    seed: int
    orbit_points: int
    distance: str = "quotient distance upper bound (finite neighbor search)"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_report(n, p, k, epsilon, sampler: SamplerConfig, need: np.ndarray, orbit_size: int) -> CoverageReport:
    covered = int(np.count_nonzero(need <= k))
    total = need.shape[0]
    frac = covered / total if total else 0.0
    se = math.sqrt(frac * (1 - frac) / total) if total else 0.0
    return CoverageReport(n, p, k, epsilon, sampler.region.describe(), total, covered, frac, se,
                          sampler.seed, orbit_size)


def coverage(x0: SymPoint, n: int, p: int, k: int, epsilon: float, sampler: SamplerConfig,
             cap: int | None = None, threads: int = 1, cloud: OrbitCloud | None = None) -> CoverageReport:
    """Fraction of sampled points that are (epsilon, k)-admissible."""
    if cloud is None:
        cloud = orbit_points(x0, n, p, k, cap)
    xs = sample_arrays(n, sampler.region, sampler.samples, sampler.seed)
    need = needed_heights_blocked(cloud, xs, epsilon, threads)
    return make_report(n, p, k, epsilon, sampler, need, int(np.count_nonzero(cloud.heights <= k)))


def covering_svg(cloud: OrbitCloud, epsilon: float, y_max: float = 2.0, size: int = 600) -> str:
    """Half-plane picture: hyperbolic epsilon-discs around orbit points and the domain outline."""
    if cloud.n != 2:
        raise ValueError("SVG output is only available for n = 2")
    x_lo, x_hi, y_lo, y_hi = -0.6, 0.6, 0.75, y_max + 0.05
    scale = size / (x_hi - x_lo)
    height = int(round((y_hi - y_lo) * scale))

    def px(x):
        return (x - x_lo) * scale

    def py(y):
        return (y_hi - y) * scale

    # the trace metric is sqrt(2) times the hyperbolic one
    rho = epsilon / math.sqrt(2)
    zs = half_plane_coords(cloud.ys)
    circles = []
    for z in zs:
        cy = z.imag * math.cosh(rho)
        r = z.imag * math.sinh(rho)
        if cy - r > y_hi or abs(z.real) > 0.5 + r + 0.1:
            continue
        circles.append(
            f'<circle cx="{px(z.real):.3f}" cy="{py(cy):.3f}" r="{r * scale:.3f}" '
            'fill="#4a7bd0" fill-opacity="0.35" stroke="#1f3f80" stroke-width="0.3"/>'
        )
    s3 = math.sqrt(3) / 2
    outline = (
        f'<path d="M {px(-0.5):.3f} {py(y_max):.3f} L {px(-0.5):.3f} {py(s3):.3f} '
        f'A {scale:.3f} {scale:.3f} 0 0 1 {px(0.5):.3f} {py(s3):.3f} '
        f'L {px(0.5):.3f} {py(y_max):.3f}" fill="none" stroke="black" stroke-width="1.2"/>'
    )
    return "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{height}" '
            f'viewBox="0 0 {size} {height}">',
            '<defs><clipPath id="win"><rect x="0" y="0" '
            f'width="{size}" height="{height}"/></clipPath></defs>',
            '<rect width="100%" height="100%" fill="white"/>',
            '<g clip-path="url(#win)">',
            *circles,
            outline,
            "</g>",
            "</svg>",
        ]
    ) + "\n"
