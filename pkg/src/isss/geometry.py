"""Similarity maps, condensation primitives, point clouds and set distances.

Everything here is an immutable value. Points are plain tuples on the
public surface and ``(n, d)`` float arrays inside clouds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

MAX_DIM = 4
ORTHO_TOL = 1e-12


def _as_point(x, dim: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("a point must be a flat coordinate vector")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def _tupleize(matrix: np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in matrix)


@dataclass(frozen=True)
class Similarity:
    """Contracting similarity ``x -> ratio * ortho @ x + translation``."""

    ratio: float
    ortho: tuple[tuple[float, ...], ...]
    translation: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"similarity ratio must lie in (0, 1), got {self.ratio}")
        q = np.asarray(self.ortho, dtype=float)
        d = len(self.translation)
        if q.shape != (d, d):
            raise ValueError("orthogonal part and translation disagree on dimension")
        if not 1 <= d <= MAX_DIM:
            raise ValueError(f"ambient dimension must be between 1 and {MAX_DIM}")
        if np.max(np.abs(q @ q.T - np.eye(d))) > ORTHO_TOL:
            raise ValueError("orthogonal part is not orthogonal")

    @classmethod
    def make(cls, ratio, ortho=None, translation=0.0) -> "Similarity":
        t = _as_point(translation)
        q = np.eye(t.shape[0]) if ortho is None else np.atleast_2d(np.asarray(ortho, dtype=float))
        return cls(float(ratio), _tupleize(q), tuple(float(v) for v in t))

    @classmethod
    def line(cls, ratio, translation=0.0, sign=1) -> "Similarity":
        """One-dimensional map ``x -> sign * ratio * x + translation``."""
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return cls.make(ratio, [[float(sign)]], [translation])

    @classmethod
    def planar(cls, ratio, angle_deg=0.0, translation=(0.0, 0.0), reflect=False) -> "Similarity":
        """Planar map: optional reflection in the x-axis, then rotation by ``angle_deg``."""
        a = math.radians(angle_deg)
        c, s = math.cos(a), math.sin(a)
        # snap exact quarter turns so orthogonality holds to machine precision
        c, s = (round(c) if abs(c - round(c)) < 1e-15 else c), (round(s) if abs(s - round(s)) < 1e-15 else s)
        rot = np.array([[c, -s], [s, c]])
        if reflect:
            rot = rot @ np.diag([1.0, -1.0])
        return cls.make(ratio, rot, translation)

    @property
    def dim(self) -> int:
        return len(self.translation)

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.ortho, dtype=float)

    @property
    def linear(self) -> np.ndarray:
        """The full linear part ``ratio * ortho``."""
        return self.ratio * self.matrix

    @property
    def offset(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)

    def __call__(self, x):
        return apply(self, x)

    def fixed_point(self) -> tuple[float, ...]:
        a = np.eye(self.dim) - self.linear
        return tuple(float(v) for v in np.linalg.solve(a, self.offset))


def apply(f, x) -> tuple[float, ...]:
    """Image of a single point under ``f``."""
    p = _as_point(x, f.dim)
    return tuple(float(v) for v in f.linear @ p + f.offset)


def apply_many(f, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, f.dim)
    return pts @ f.linear.T + f.offset


def compose(f: Similarity, g: Similarity) -> Similarity:
    """Return ``f o g``; the ratio multiplies."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    q = f.matrix @ g.matrix
    t = f.ratio * (f.matrix @ g.offset) + f.offset
    return Similarity(f.ratio * g.ratio, _tupleize(q), tuple(float(v) for v in t))


@dataclass(frozen=True)
class AmbientBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners disagree on dimension")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box requires lo <= hi componentwise")

    @classmethod
    def make(cls, lo, hi) -> "AmbientBox":
        return cls(tuple(float(v) for v in _as_point(lo)), tuple(float(v) for v in _as_point(hi)))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.all((pts >= np.asarray(self.lo) - tol) & (pts <= np.asarray(self.hi) + tol), axis=1)

    def maps_into_self(self, f, tol: float = 1e-12) -> bool:
        return bool(np.all(self.contains(apply_many(f, self.corners()), tol=tol)))

    def union(self, other: "AmbientBox") -> "AmbientBox":
        return AmbientBox(tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))

    def product(self, other: "AmbientBox") -> "AmbientBox":
        return AmbientBox(self.lo + other.lo, self.hi + other.hi)


SHAPES = ("empty", "points", "segment", "circle", "disk", "box", "union", "product")


@dataclass(frozen=True)
class CondensationSet:
    """A compact condensation primitive with known dimensions.

    ``params`` depends on ``shape``:

    * ``points``: ``(p1, p2, ...)``
    * ``segment``: ``(a, b)``
    * ``circle`` / ``disk``: ``(center, radius)``, planar only
    * ``box``: ``(lo, hi)``
    * ``union``: tuple of member sets
    * ``product``: ``(left, right)``, living in the product space
    """

    shape: str
    params: tuple = ()

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown condensation shape {self.shape!r}")
        if self.shape in ("circle", "disk"):
            center, radius = self.params
            if len(center) != 2:
                raise ValueError(f"{self.shape} condensation needs a planar center")
            if radius < 0:
                raise ValueError("radius must be nonnegative")
        if self.shape == "points" and not self.params:
            raise ValueError("point condensation needs at least one point")
        if self.shape == "union" and not self.params:
            raise ValueError("union of no sets; use the empty condensation")

    @classmethod
    def empty(cls) -> "CondensationSet":
        return cls("empty")

    @classmethod
    def points(cls, pts) -> "CondensationSet":
        return cls("points", tuple(tuple(float(v) for v in _as_point(p)) for p in pts))

    @classmethod
    def segment(cls, a, b) -> "CondensationSet":
        return cls("segment", (tuple(float(v) for v in _as_point(a)), tuple(float(v) for v in _as_point(b))))

    @classmethod
    def circle(cls, center, radius) -> "CondensationSet":
        return cls("circle", (tuple(float(v) for v in _as_point(center, 2)), float(radius)))

    @classmethod
    def disk(cls, center, radius) -> "CondensationSet":
        return cls("disk", (tuple(float(v) for v in _as_point(center, 2)), float(radius)))

    @classmethod
    def box(cls, lo, hi) -> "CondensationSet":
        b = AmbientBox.make(lo, hi)
        return cls("box", (b.lo, b.hi))

    @classmethod
    def union_of(cls, *sets: "CondensationSet") -> "CondensationSet":
        parts = []
        for s in sets:
            if s.shape == "union":
                parts.extend(s.params)
            elif not s.is_empty:
                parts.append(s)
        if not parts:
            return cls.empty()
        if len(parts) == 1:
            return parts[0]
        return cls("union", tuple(parts))

    @classmethod
    def product_of(cls, left: "CondensationSet", right: "CondensationSet") -> "CondensationSet":
        if left.is_empty or right.is_empty:
            return cls.empty()
        return cls("product", (left, right))

    @property
    def is_empty(self) -> bool:
        return self.shape == "empty"

    @property
    def dim(self) -> int | None:
        s, p = self.shape, self.params
        if s == "empty":
            return None
        if s == "points":
            return len(p[0])
        if s in ("segment", "box"):
            return len(p[0])
        if s in ("circle", "disk"):
            return 2
        if s == "union":
            return p[0].dim
        return p[0].dim + p[1].dim

    def _dims(self) -> tuple[float, float, float]:
        s, p = self.shape, self.params
        if s in ("empty", "points"):
            return (0.0, 0.0, 0.0)
        if s == "segment":
            d = 0.0 if p[0] == p[1] else 1.0
        elif s == "circle":
            d = 0.0 if p[1] == 0 else 1.0
        elif s == "disk":
            d = 0.0 if p[1] == 0 else 2.0
        elif s == "box":
            d = float(sum(a < b for a, b in zip(*p)))
        elif s == "union":
            ds = [m._dims() for m in p]
            return tuple(max(v[i] for v in ds) for i in range(3))
        else:
            # all primitives are box-regular, so dimensions add
            a, b = p[0]._dims(), p[1]._dims()
            return tuple(x + y for x, y in zip(a, b))
        return (d, d, d)

    @property
    def hausdorff_dim(self) -> float:
        return self._dims()[0]

    @property
    def lower_box_dim(self) -> float:
        return self._dims()[1]

    @property
    def upper_box_dim(self) -> float:
        return self._dims()[2]

    def bounding_box(self) -> AmbientBox | None:
        s, p = self.shape, self.params
        if s == "empty":
            return None
        if s == "points":
            arr = np.asarray(p)
            return AmbientBox.make(arr.min(axis=0), arr.max(axis=0))
        if s == "segment":
            arr = np.asarray(p)
            return AmbientBox.make(arr.min(axis=0), arr.max(axis=0))
        if s in ("circle", "disk"):
            c, r = np.asarray(p[0]), p[1]
            return AmbientBox.make(c - r, c + r)
        if s == "box":
            return AmbientBox(*p)
        if s == "union":
            box = p[0].bounding_box()
            for m in p[1:]:
                box = box.union(m.bounding_box())
            return box
        return p[0].bounding_box().product(p[1].bounding_box())

    @property
    def is_convex(self) -> bool:
        s = self.shape
        if s == "points":
            return len(self.params) == 1
        if s == "circle":
            return self.params[1] == 0
        if s == "product":
            return self.params[0].is_convex and self.params[1].is_convex
        return s in ("segment", "disk", "box")

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """Closed-set membership test for an ``(n, d)`` array."""
        pts = np.asarray(points, dtype=float)
        s, p = self.shape, self.params
        if s == "empty":
            return np.zeros(len(pts), dtype=bool)
        pts = pts.reshape(-1, self.dim)
        if s == "points":
            tree = cKDTree(np.asarray(p))
            dist, _ = tree.query(pts)
            return dist <= tol
        if s == "segment":
            a, b = np.asarray(p[0]), np.asarray(p[1])
            ab = b - a
            L2 = float(ab @ ab)
            if L2 == 0.0:
                return np.linalg.norm(pts - a, axis=1) <= tol
            u = np.clip((pts - a) @ ab / L2, 0.0, 1.0)
            return np.linalg.norm(pts - (a + u[:, None] * ab), axis=1) <= tol
        if s == "circle":
            r = np.linalg.norm(pts - np.asarray(p[0]), axis=1)
            return np.abs(r - p[1]) <= tol
        if s == "disk":
            return np.linalg.norm(pts - np.asarray(p[0]), axis=1) <= p[1] + tol
        if s == "box":
            return AmbientBox(*p).contains(pts, tol)
        if s == "union":
            out = np.zeros(len(pts), dtype=bool)
            for m in p:
                out |= m.contains(pts, tol)
            return out
        d0 = p[0].dim
        return p[0].contains(pts[:, :d0], tol) & p[1].contains(pts[:, d0:], tol)


@dataclass(frozen=True)
class PointCloud:
    """Finite stand-in for a compact set.

    ``resolution`` is a covering radius: the represented set lies within
    ``resolution`` of ``points`` and vice versa. ``box`` is the ambient box
    the cloud lives in, used to anchor counting grids.
    """

    points: np.ndarray
    resolution: float
    box: AmbientBox | None = None
    empty: bool = field(default=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        object.__setattr__(self, "points", pts)
        if self.resolution < 0:
            raise ValueError("resolution must be nonnegative")
        if len(pts) == 0 and not self.empty:
            raise ValueError("an empty cloud must be flagged as empty")

    @classmethod
    def empty_cloud(cls, dim: int, box: AmbientBox | None = None) -> "PointCloud":
        return cls(np.zeros((0, dim)), 0.0, box, empty=True)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def union(self, other: "PointCloud") -> "PointCloud":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        pts = normalize_points(np.vstack([self.points, other.points]))
        return PointCloud(pts, max(self.resolution, other.resolution), self.box or other.box,
                          empty=len(pts) == 0)


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Drop exact duplicates and sort lexicographically."""
    if len(points) == 0:
        return points
    return np.unique(points, axis=0)


def _disk_points(center, radius, eps):
    c = np.asarray(center, dtype=float)
    if radius == 0:
        return c[None, :], 0.0
    h = eps / math.sqrt(2.0)
    n = int(math.ceil(radius / h))
    g = np.arange(-n, n + 1) * h
    xx, yy = np.meshgrid(g, g, indexing="ij")
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    grid = grid[np.linalg.norm(grid, axis=1) <= radius] + c
    rim, _ = _circle_points(center, radius, h)
    return np.vstack([grid, rim]), eps


def _circle_points(center, radius, eps):
    c = np.asarray(center, dtype=float)
    if radius == 0:
        return c[None, :], 0.0
    half = min(eps / (2.0 * radius), 1.0)
    n = max(3, int(math.ceil(math.pi / math.asin(half))))
    th = 2.0 * math.pi * np.arange(n) / n
    pts = c + radius * np.column_stack([np.cos(th), np.sin(th)])
    # farthest circle point from the mesh sits mid-arc
    return pts, 2.0 * radius * math.sin(math.pi / (2 * n))


def _box_points(lo, hi, eps):
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    d = len(lo)
    step = 2.0 * eps / math.sqrt(d)
    axes, halves = [], []
    for a, b in zip(lo, hi):
        n = max(1, int(math.ceil((b - a) / step))) if b > a else 0
        axes.append(np.linspace(a, b, n + 1) if n else np.array([a]))
        halves.append((b - a) / (2 * n) if n else 0.0)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    return pts, float(np.linalg.norm(halves))


def discretize(C: CondensationSet, eps: float) -> PointCloud:
    """Finite cloud within ``eps`` of ``C`` (both directions), points inside ``C``."""
    if not eps > 0:
        raise ValueError("discretization step must be positive")
    s, p = C.shape, C.params
    if s == "empty":
        return PointCloud.empty_cloud(1)
    if s == "points":
        return PointCloud(normalize_points(np.asarray(p, dtype=float)), 0.0)
    if s == "segment":
        a, b = np.asarray(p[0]), np.asarray(p[1])
        L = float(np.linalg.norm(b - a))
        if L == 0.0:
            return PointCloud(a[None, :], 0.0)
        n = int(math.ceil(L / eps))
        u = np.arange(n + 1) / n
        return PointCloud(a + u[:, None] * (b - a), L / (2 * n))
    if s == "circle":
        pts, res = _circle_points(p[0], p[1], eps)
        return PointCloud(pts, res)
    if s == "disk":
        pts, res = _disk_points(p[0], p[1], eps)
        return PointCloud(normalize_points(pts), res)
    if s == "box":
        pts, res = _box_points(p[0], p[1], eps)
        return PointCloud(pts, res)
    if s == "union":
        clouds = [discretize(m, eps) for m in p]
        return PointCloud(normalize_points(np.vstack([c.points for c in clouds])),
                          max(c.resolution for c in clouds))
    left = discretize(p[0], eps / math.sqrt(2.0))
    right = discretize(p[1], eps / math.sqrt(2.0))
    li, ri = np.meshgrid(np.arange(len(left)), np.arange(len(right)), indexing="ij")
    pts = np.hstack([left.points[li.ravel()], right.points[ri.ravel()]])
    return PointCloud(pts, math.hypot(left.resolution, right.resolution))


def directed_distance(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Distance from every point of ``a`` to the nearest point of ``b``."""
    p = {"euclidean": 2, "max": np.inf}[metric]
    dist, _ = cKDTree(b).query(a, p=p)
    return dist


def hausdorff_distance(A: PointCloud, B: PointCloud, metric: str = "euclidean") -> float:
    """Exact Hausdorff distance between two finite clouds.

    ``metric="max"`` uses the max-of-coordinates norm, which is the product
    metric when each factor is one-dimensional.
    """
    if len(A) == 0 or len(B) == 0:
        raise ValueError("Hausdorff distance needs nonempty clouds")
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    return float(max(directed_distance(A.points, B.points, metric).max(),
                     directed_distance(B.points, A.points, metric).max()))


def product_distance(a: np.ndarray, b: np.ndarray, split: int) -> np.ndarray:
    """Max-of-factors metric on ``R^split x R^rest`` between paired rows."""
    d1 = np.linalg.norm(a[:, :split] - b[:, :split], axis=1)
    d2 = np.linalg.norm(a[:, split:] - b[:, split:], axis=1)
    return np.maximum(d1, d2)
