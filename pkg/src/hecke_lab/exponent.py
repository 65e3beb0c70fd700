"""Empirical Diophantine exponent: minimal covering height versus log(1/epsilon)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .covering import SamplerConfig, needed_heights_blocked, orbit_points, sample_arrays
from .hecke_enum import DEFAULT_CAP, coset_count
from .symspace import SymPoint, dimension

DEFAULT_TARGET = 0.9


def normalization(n: int) -> float:
    """The factor (n+2)/(2n) relating height to log_p(1/epsilon)."""
    return (n + 2) / (2 * n)


def heuristic_lower_bound(n: int, p: int, epsilon: float) -> float:
    """Volume-counting lower bound ``d / (n(n-1)) * log_p(1/epsilon)`` on the covering height."""
    return dimension(n) / (n * (n - 1)) * math.log(1 / epsilon, p)


@dataclass
class MinKResult:
    epsilon: float
    target: float
    k: int | None                # None when undetermined under the cap
    fraction: float              # achieved at k, or the last fraction seen
    k_half: int | None           # smallest k with coverage >= 1/2
    heuristic_bound: float
    fractions: list[float] = field(default_factory=list)  # coverage at k = 0, 1, ...

    @property
    def determined(self) -> bool:
        return self.k is not None


def min_k_for_coverage(x0: SymPoint, n: int, p: int, epsilon: float, target_fraction: float,
                       sampler: SamplerConfig, cap: int | None = None, threads: int = 1,
                       max_k: int | None = None, metric_scale: float = 1.0) -> MinKResult:
    """Smallest k whose coverage reaches ``target_fraction``.

    Orbit clouds are built at K = ceil(bound) - 1, K + 1, ... until the target
    is met; heights of cloud points give the coverage at every k <= K from the
    same cloud. Exceeding ``cap`` cosets or ``max_k`` gives an undetermined
    result. Distances are multiplied by ``metric_scale`` before comparison.
    """
    if not 0 < target_fraction < 1:
        raise ValueError("target_fraction must lie in (0, 1)")
    if epsilon <= 0 or metric_scale <= 0:
        raise ValueError("epsilon and metric_scale must be positive")
    cap = DEFAULT_CAP if cap is None else cap
    bound = heuristic_lower_bound(n, p, epsilon)
    K = max(0, math.ceil(bound) - 1)
    xs = sample_arrays(n, sampler.region, sampler.samples, sampler.seed)
    fractions: list[float] = []
    while True:
        if coset_count(n, p, n * K) > cap or (max_k is not None and K > max_k):
            last = fractions[-1] if fractions else 0.0
            k_half = next((k for k, f in enumerate(fractions) if f >= 0.5), None)
            return MinKResult(epsilon, target_fraction, None, last, k_half, bound, fractions)
        cloud = orbit_points(x0, n, p, K, cap)
        need = needed_heights_blocked(cloud, xs, epsilon / metric_scale, threads)
        fractions = [float(np.mean(need <= k)) for k in range(K + 1)]
        if fractions[-1] >= target_fraction:
            k = next(k for k, f in enumerate(fractions) if f >= target_fraction)
            k_half = next(k for k, f in enumerate(fractions) if f >= 0.5)
            return MinKResult(epsilon, target_fraction, k, fractions[k], k_half, bound, fractions)
        K += 1


@dataclass
class GridPoint:
    epsilon: float
    k_min: int | None
    coverage_target: float
    achieved_fraction: float
    k_half: int | None = None
    heuristic_bound: float | None = None

    @property
    def determined(self) -> bool:
        return self.k_min is not None

    @property
    def lower_bound_ok(self) -> bool | None:
        """Coverage-1/2 height is at least the volume bound minus one."""
        if self.k_half is None or self.heuristic_bound is None:
            return None
        return self.k_half >= self.heuristic_bound - 1


@dataclass
class ExponentFit:
    n: int
    p: int
    x0: str
    grid: list[GridPoint]
    kappa_hat: float
    slope_stderr: float
    intercept: float
    normalization: float

    def abscissa(self, eps: float) -> float:
        return self.normalization * math.log(1 / eps, self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        for g, src in zip(d["grid"], self.grid):
            g["abscissa"] = self.abscissa(src.epsilon)
            g["lower_bound_ok"] = src.lower_bound_ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        lines = ["abscissa,k_min"]
        for g in self.grid:
            if g.determined:
                lines.append(f"{self.abscissa(g.epsilon):.17g},{g.k_min}")
        return "\n".join(lines) + "\n"


class FitError(ValueError):
    pass


def fit_kappa(grid: Sequence[GridPoint], n: int, p: int, x0: str = "") -> ExponentFit:
    """Least-squares slope of k_min against ``(n+2)/(2n) log_p(1/eps)``, with intercept."""
    grid = sorted(grid, key=lambda g: -g.epsilon)
    pts = [g for g in grid if g.determined]
    if len(pts) < 3:
        raise FitError(f"need at least 3 determined grid points, got {len(pts)}")
    norm = normalization(n)
    x = np.array([norm * math.log(1 / g.epsilon, p) for g in pts])
    y = np.array([float(g.k_min) for g in pts])
    if np.ptp(x) == 0:
        raise FitError("degenerate grid: all epsilons are equal")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    dof = len(pts) - 2
    resid = y - (intercept + slope * x)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return ExponentFit(n, p, x0, list(grid), slope, stderr, intercept, norm)


def synthetic_epsilons(n: int, p: int, points: int = 10) -> list[float]:
    """Radii whose abscissas step by sqrt(2) - 1, so no abscissa is a rounding tie."""
    norm = normalization(n)
    return [p ** (-(1 + (math.sqrt(2) - 1) * j) / norm) for j in range(points)]


def synthetic_grid(n: int, p: int, epsilons: Sequence[float], c: float = 1.0) -> list[GridPoint]:
    """Grid with ``k_min = round(c * (n+2)/(2n) * log_p(1/eps))``, ties rounded up."""
    norm = normalization(n)
    return [
        GridPoint(e, math.floor(c * norm * math.log(1 / e, p) + 0.5), DEFAULT_TARGET, 1.0)
        for e in epsilons
    ]


def estimate_kappa(x0: SymPoint, n: int, p: int, epsilons: Sequence[float], target: float,
                   sampler: SamplerConfig, cap: int | None = None, threads: int = 1,
                   x0_label: str = "", max_k: int | None = None,
                   metric_scale: float = 1.0) -> tuple[list[GridPoint], ExponentFit | None]:
    """Run the covering sweep over ``epsilons``; the fit is None if too few points resolve."""
    grid = []
    for eps in sorted(epsilons, reverse=True):
        r = min_k_for_coverage(x0, n, p, eps, target, sampler, cap, threads, max_k, metric_scale)
        grid.append(GridPoint(eps, r.k, target, r.fraction, r.k_half, r.heuristic_bound))
    try:
        fit = fit_kappa(grid, n, p, x0_label)
    except FitError:
        fit = None
    return grid, fit
