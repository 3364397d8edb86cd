"""Grid box counting, log-log dimension fits and covering regularity exponents.

Counts use an axis-aligned grid anchored at the cloud's ambient box corner
(the origin if the cloud has no box). A set of diameter ``delta`` meets at
most ``2**d`` grid cells of side ``delta``, so grid counts differ from
minimal cover counts by a bounded factor and log-slopes are unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud


class ResolutionError(ValueError):
    """Scale too fine for the resolution of the cloud."""


def _origin(cloud: PointCloud) -> np.ndarray:
    if cloud.box is not None:
        return np.asarray(cloud.box.lo, dtype=float)
    return np.zeros(cloud.dim)


def _count(points: np.ndarray, origin: np.ndarray, delta: float) -> int:
    if len(points) == 0:
        return 0
    cells = np.floor((points - origin) / delta).astype(np.int64)
    return len(np.unique(cells, axis=0))


def grid_count(cloud: PointCloud, delta: float) -> int:
    """Number of occupied cells of side ``delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta < 2 * cloud.resolution:
        raise ResolutionError(f"delta={delta:g} is below twice the cloud resolution {cloud.resolution:g}")
    return _count(cloud.points, _origin(cloud), delta)


def greedy_cover_count(points: np.ndarray, delta: float) -> int:
    """Number of closed balls of diameter ``delta`` a greedy sweep uses to cover ``points``.

    Brute force; meant for small clouds.
    """
    pts = np.asarray(points, dtype=float)
    order = np.lexsort(pts.T[::-1])
    remaining = np.ones(len(pts), dtype=bool)
    count = 0
    for i in order:
        if not remaining[i]:
            continue
        count += 1
        remaining &= np.linalg.norm(pts - pts[i], axis=1) > delta / 2
    return count


@dataclass(frozen=True)
class BoxCountScan:
    rows: list[tuple[float, int]]
    fitted_slope: float
    intercept: float
    max_residual: float


def fit_dimension(cloud: PointCloud, deltas) -> BoxCountScan:
    """Least-squares slope of ``log N_delta`` against ``-log delta``.

    Scales below twice the cloud resolution are dropped; at least four must
    remain.
    """
    ds = sorted({float(d) for d in deltas if d >= 2 * cloud.resolution and d > 0}, reverse=True)
    if len(ds) < 4:
        raise ResolutionError("need at least four scales above twice the cloud resolution")
    origin = _origin(cloud)
    rows = [(d, _count(cloud.points, origin, d)) for d in ds]
    x = -np.log([d for d, _ in rows])
    y = np.log([n for _, n in rows])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return BoxCountScan(rows, float(slope), float(intercept), float(np.abs(resid).max()))


def regularity_exponent(cloud: PointCloud, t: float, delta: float, p_grid: int = 16) -> float:
    """Largest ``p`` on the grid ``{0, 1/p_grid, ..., 1}`` with ``N_{delta^p} >= delta^(-p t)``.

    This approximates the supremum from below by at most ``1 / p_grid``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if p_grid < 16:
        raise ValueError("p_grid must be at least 16")
    if delta < 2 * cloud.resolution:
        raise ResolutionError(f"delta={delta:g} is below twice the cloud resolution {cloud.resolution:g}")
    origin = _origin(cloud)
    best = 0.0
    for i in range(p_grid + 1):
        p = i / p_grid
        scale = delta ** p
        if _count(cloud.points, origin, scale) >= delta ** (-p * t) * (1 - 1e-12):
            best = p
    return best


@dataclass(frozen=True)
class RegularityScan:
    t: float
    rows: list[tuple[float, float]]
    p_liminf_proxy: float
    p_step: float


def regularity_liminf(cloud: PointCloud, t: float, deltas, p_grid: int = 16) -> RegularityScan:
    """Exponents over a decreasing list of scales; the minimum stands in for the liminf."""
    ds = [float(d) for d in deltas]
    if any(a <= b for a, b in zip(ds, ds[1:])):
        raise ValueError("scales must be strictly decreasing")
    rows = [(d, regularity_exponent(cloud, t, d, p_grid)) for d in ds]
    return RegularityScan(t, rows, min(p for _, p in rows), 1.0 / p_grid)


def scale_bound(cloud: PointCloud, delta: float) -> int:
    """Largest possible grid count: ``(ceil(diam / delta) + 1) ** d``."""
    pts = cloud.points
    diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) if len(pts) else 0.0
    return (math.ceil(diam / delta) + 1) ** cloud.dim
