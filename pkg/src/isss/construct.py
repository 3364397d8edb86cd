"""Building attractors, sub-self-similar sets, orbits of the condensation set,
and the inhomogeneous sets they form, plus numerical checks of the
structural identities they satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import codespace as cs
from .codespace import RatioVector, Sft
from .dimension import moran_root, spectral_dim
from .geometry import (AmbientBox, CondensationSet, PointCloud, apply_many,
                       compose, discretize, normalize_points)

POINT_CAP = 10_000_000
MAP_CAP = 100_000


class ShiftClosureError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        pairs = ", ".join(f"({i + 1},{j + 1})" for i, j in violations)
        super().__init__(f"code space is not shift-closed; violations {pairs}")


@dataclass(frozen=True)
class SystemSpec:
    """One inhomogeneous system: maps, code space, condensation set, ambient box.

    ``probabilities`` is ``(p_0, p_1, ..., p_N)`` with ``p_0`` the weight of
    the condensation measure.
    """

    maps: tuple
    codespace: Sft
    condensation: CondensationSet
    ambient: AmbientBox
    probabilities: tuple[float, ...] | None = None
    osc_asserted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValueError("a system needs at least one map")
        d = self.ambient.dim
        if any(f.dim != d for f in self.maps):
            raise ValueError("maps and ambient box disagree on dimension")
        if self.codespace.alphabet_size != len(self.maps):
            raise ValueError("code space alphabet size differs from the number of maps")
        for i, f in enumerate(self.maps):
            if not f.ratio < 1.0:
                raise ValueError(f"map {i + 1} is not a contraction")
            if not self.ambient.maps_into_self(f, tol=1e-9):
                raise ValueError(f"map {i + 1} does not send the ambient box into itself")
        C = self.condensation
        if not C.is_empty:
            if C.dim != d:
                raise ValueError("condensation set lives in the wrong dimension")
            bb = C.bounding_box()
            if not np.all(self.ambient.contains(bb.corners(), tol=1e-9)):
                raise ValueError("condensation set leaves the ambient box")
        if self.probabilities is not None:
            p = np.asarray(self.probabilities, dtype=float)
            object.__setattr__(self, "probabilities", tuple(float(v) for v in p))
            if len(p) != len(self.maps) + 1:
                raise ValueError("probability vector must have one entry per map plus p_0")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("probabilities must be nonnegative and sum to 1")
            if p[0] > 0 and C.is_empty:
                raise ValueError("positive condensation weight needs a nonempty condensation set")

    @property
    def dim(self) -> int:
        return self.ambient.dim

    @property
    def ratios(self) -> RatioVector:
        return RatioVector.of([f.ratio for f in self.maps])

    def full_shift(self) -> "SystemSpec":
        return replace(self, codespace=Sft.full(len(self.maps)))


@dataclass
class WordMaps:
    """Composite maps ``f_w`` for a set of words, stored as arrays."""

    words: np.ndarray | None
    linear: np.ndarray
    offset: np.ndarray
    ratio: np.ndarray

    def __len__(self):
        return len(self.ratio)

    def images(self, x: np.ndarray) -> np.ndarray:
        """``f_w(x)`` for every word and a single point ``x``."""
        return self.linear @ x + self.offset

    def take(self, mask) -> "WordMaps":
        w = None if self.words is None else [self.words[i] for i in np.nonzero(mask)[0]]
        return WordMaps(w, self.linear[mask], self.offset[mask], self.ratio[mask])


def _concat(parts: list[WordMaps], d: int, keep_words: bool) -> WordMaps:
    if not parts:
        return WordMaps([] if keep_words else None, np.zeros((0, d, d)), np.zeros((0, d)), np.zeros(0))
    words = None
    if keep_words:
        words = [w for p in parts for w in p.words]
    return WordMaps(words, np.concatenate([p.linear for p in parts]),
                    np.concatenate([p.offset for p in parts]),
                    np.concatenate([p.ratio for p in parts]))


def word_tree(maps, S: Sft, delta: float, keep_words: bool = False,
              cap: int = POINT_CAP) -> tuple[WordMaps, WordMaps]:
    """Split the admissible word tree at ``delta``.

    Returns ``(inside, stopping)``: all words with ratio at least ``delta``,
    and the delta-stopping words (first ratio below ``delta``).
    """
    d = maps[0].dim
    L = np.stack([f.linear for f in maps])
    t = np.stack([f.offset for f in maps])
    rho = np.array([f.ratio for f in maps])
    T = S.matrix
    sym = np.array(sorted(S.initial), dtype=np.int64)
    lin, off, r = L[sym], t[sym], rho[sym]
    words = [(int(a),) for a in sym] if keep_words else None
    inside, stops = [], []
    total = 0
    while len(sym):
        crossed = cs.below(r, delta)
        level = WordMaps(words, lin, off, r)
        stops.append(level.take(crossed))
        keep = ~crossed
        inside.append(level.take(keep))
        total += len(sym)
        if total > cap:
            raise MemoryError(f"word tree exceeds the cap of {cap} words")
        lin, off, r, last = lin[keep], off[keep], r[keep], sym[keep]
        if keep_words:
            words = [w for w, k in zip(words, keep) if k]
        parent, child = np.nonzero(T[last])
        if keep_words:
            words = [words[p] + (int(c),) for p, c in zip(parent, child)]
        off = np.einsum("nij,nj->ni", lin[parent], t[child]) + off[parent]
        lin = lin[parent] @ L[child]
        r = r[parent] * rho[child]
        sym = child
    return _concat(inside, d, keep_words), _concat(stops, d, keep_words)


def thin(points: np.ndarray, resolution: float, cap: int = POINT_CAP) -> tuple[np.ndarray, float]:
    """Keep one point per grid cell of side ``resolution / 2`` when over the cap."""
    if len(points) <= cap or resolution <= 0:
        return points, resolution
    h = resolution / 2.0
    cells = np.floor(points / h).astype(np.int64)
    _, first = np.unique(cells, axis=0, return_index=True)
    d = points.shape[1]
    return points[np.sort(first)], resolution + h * math.sqrt(d)


def _require_shift_closed(S: Sft):
    bad = cs.validate_shift_closed(S)
    if bad:
        raise ShiftClosureError(bad)


def _address_cloud(spec: SystemSpec, S: Sft, resolution: float) -> PointCloud:
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    diam = spec.ambient.diameter
    delta = min(resolution / diam, 1.0) if diam > 0 else 1.0
    _, stops = word_tree(spec.maps, S, delta)
    if len(stops) == 0:
        return PointCloud.empty_cloud(spec.dim, spec.ambient)
    pts = stops.images(spec.ambient.center)
    res = float(stops.ratio.max()) * diam
    pts, res = thin(normalize_points(pts), res)
    return PointCloud(pts, res, spec.ambient)


def attractor_cloud(spec: SystemSpec, resolution: float) -> PointCloud:
    """Cloud within ``resolution`` of the attractor of the maps (full shift)."""
    return _address_cloud(spec, Sft.full(len(spec.maps)), resolution)


def sss_cloud(spec: SystemSpec, resolution: float) -> PointCloud:
    """Cloud within ``resolution`` of the image of the code space under the address map."""
    _require_shift_closed(spec.codespace)
    return _address_cloud(spec, spec.codespace, resolution)


def _discretize_cached(C: CondensationSet, cache: dict, eps: float) -> PointCloud:
    # quantize the step down to a power of two so few distinct meshes are built
    key = math.floor(math.log2(eps))
    if key not in cache:
        cache[key] = discretize(C, 2.0 ** key)
    return cache[key]


def _orbit_points(spec: SystemSpec, wm: WordMaps, resolution: float, cache: dict):
    """Images ``f_w(mesh of C)`` with a per-word mesh fine enough for ``resolution``."""
    C = spec.condensation
    cap_eps = max(spec.ambient.diameter, resolution)
    out, res = [], 0.0
    if len(wm) == 0:
        return out, res
    eps = np.minimum(resolution / wm.ratio, cap_eps)
    keys = np.floor(np.log2(eps)).astype(int)
    for key in np.unique(keys):
        sel = keys == key
        mesh = _discretize_cached(C, cache, 2.0 ** key)
        lin, off = wm.linear[sel], wm.offset[sel]
        imgs = np.einsum("nij,mj->nmi", lin, mesh.points) + off[:, None, :]
        out.append(imgs.reshape(-1, spec.dim))
        res = max(res, float(wm.ratio[sel].max()) * mesh.resolution)
    return out, res


def orbit_cloud(spec: SystemSpec, resolution: float) -> PointCloud:
    """Cloud within ``resolution`` of the orbit of ``C`` under all admissible words.

    Words are enumerated down to the stopping set at ``resolution / diam``;
    every deeper image lies inside the image of the ambient box under its
    stopping prefix, hence within ``resolution`` of the cloud.
    """
    C = spec.condensation
    if C.is_empty:
        return PointCloud.empty_cloud(spec.dim, spec.ambient)
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    _require_shift_closed(spec.codespace)
    diam = spec.ambient.diameter
    delta = min(resolution / diam, 1.0) if diam > 0 else 1.0
    inside, stops = word_tree(spec.maps, spec.codespace, delta)
    cache: dict = {}
    base = discretize(C, resolution)
    chunks, res = [base.points], base.resolution
    for wm in (inside, stops):
        pts, r = _orbit_points(spec, wm, resolution, cache)
        chunks.extend(pts)
        res = max(res, r)
    if len(stops):
        res = max(res, float(stops.ratio.max()) * diam)
    pts = np.vstack(chunks)
    if len(pts) > POINT_CAP:
        pts, res = thin(pts, res)
    return PointCloud(normalize_points(pts), res, spec.ambient)


def isss_cloud(spec: SystemSpec, resolution: float) -> PointCloud:
    """Cloud for ``E u O_S``: sub-self-similar part plus the orbit of ``C``."""
    E = sss_cloud(spec, resolution)
    if spec.condensation.is_empty:
        return E
    O = orbit_cloud(spec, resolution)
    if E.empty:
        return O
    return E.union(O)


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    worst_gap: float
    tolerance: float


def verify_inclusion(F: PointCloud, spec: SystemSpec, tol: float) -> VerificationReport:
    """Check ``F`` is within ``tol`` of ``union f_i(F) u C`` point by point."""
    if tol < 2 * F.resolution * (1 - 1e-9):
        raise ValueError("tolerance must be at least twice the cloud resolution")
    if len(F) == 0:
        return VerificationReport(True, 0.0, tol)
    targets = [apply_many(f, F.points) for f in spec.maps]
    if not spec.condensation.is_empty:
        eps = tol / 2 if tol > 0 else 1e-9
        targets.append(discretize(spec.condensation, eps).points)
    dist, _ = cKDTree(np.vstack(targets)).query(F.points)
    worst = float(dist.max())
    return VerificationReport(worst <= tol, worst, tol)


def verify_closure(E: PointCloud, O: PointCloud, tol: float) -> bool:
    """Every point of ``E`` lies within ``tol`` of the orbit cloud ``O``."""
    if len(O) == 0:
        raise ValueError("orbit cloud is empty")
    if len(E) == 0:
        return True
    dist, _ = cKDTree(O.points).query(E.points)
    return bool(dist.max() <= tol)


def minimal_condensation(E: PointCloud, maps, tol: float) -> PointCloud:
    """Points of ``E`` farther than ``tol`` from ``union f_i(E)``."""
    if tol < 2 * E.resolution * (1 - 1e-9):
        raise ValueError("tolerance must be at least twice the cloud resolution")
    if len(E) == 0:
        return E
    images = np.vstack([apply_many(f, E.points) for f in maps])
    dist, _ = cKDTree(images).query(E.points)
    left = E.points[dist > tol]
    return PointCloud(left, E.resolution, E.box, empty=len(left) == 0)


@dataclass(frozen=True)
class CoveringReport:
    passed: bool
    checked: int
    outside: int
    delta: float


def covering_inclusion(spec: SystemSpec, delta: float, resolution: float) -> CoveringReport:
    """Images of ``C`` under words with ratio below ``delta`` lie in the boxes ``f_w(X)``, ``w`` in S(delta).

    Words are enumerated down to ratio ``resolution / diam``; membership in
    each image box is decided by pulling points back through ``f_w``.
    """
    C = spec.condensation
    if C.is_empty:
        return CoveringReport(True, 0, 0, delta)
    diam = spec.ambient.diameter
    inside, stops = word_tree(spec.maps, spec.codespace, min(resolution / diam, delta))
    deep = [wm.take(wm.ratio < delta * (1 - cs.REL_TIE)) for wm in (inside, stops)]
    chunks: list = []
    cache: dict = {}
    for wm in deep:
        pts, _ = _orbit_points(spec, wm, resolution, cache)
        chunks.extend(pts)
    if not chunks:
        return CoveringReport(True, 0, 0, delta)
    pts = np.vstack(chunks)
    _, boxes = word_tree(spec.maps, spec.codespace, delta)
    lo, hi = np.asarray(spec.ambient.lo), np.asarray(spec.ambient.hi)
    covered = np.zeros(len(pts), dtype=bool)
    tol = 1e-9 * max(diam, 1.0)
    for A, b in zip(boxes.linear, boxes.offset):
        todo = ~covered
        if not todo.any():
            break
        pre = np.linalg.solve(A, (pts[todo] - b).T).T
        # tolerance measured in the image, so scale back by the map's size
        scale = tol / np.linalg.norm(A, 2)
        ok = np.all((pre >= lo - scale) & (pre <= hi + scale), axis=1)
        idx = np.nonzero(todo)[0]
        covered[idx[ok]] = True
    outside = int((~covered).sum())
    return CoveringReport(outside == 0, len(pts), outside, delta)


def union_systems(a: SystemSpec, b: SystemSpec) -> SystemSpec:
    """Concatenate two systems; condensation sets are united.

    Code spaces combine block-diagonally, except that two full shifts give
    the full shift on the combined alphabet.
    """
    if a.dim != b.dim:
        raise ValueError("systems live in different dimensions")
    n, m = len(a.maps), len(b.maps)
    if a.codespace.is_full and b.codespace.is_full:
        S = Sft.full(n + m)
    else:
        T = np.zeros((n + m, n + m), dtype=bool)
        T[:n, :n] = a.codespace.matrix
        T[n:, n:] = b.codespace.matrix
        init = set(a.codespace.initial) | {n + j for j in b.codespace.initial}
        S = Sft.from_matrix(T, init)
    box = a.ambient.union(b.ambient)
    return SystemSpec(a.maps + b.maps, S, CondensationSet.union_of(a.condensation, b.condensation),
                      box, None, False)


def power_system(spec: SystemSpec, k: int, cap: int = MAP_CAP) -> SystemSpec:
    """The system of composite maps ``f_w`` over admissible words of length ``k``.

    Successive blocks may follow each other when the last symbol of one may
    be followed by the first symbol of the next.
    """
    if k < 1:
        raise ValueError("power must be positive")
    words = cs.level_words(spec.codespace, k)
    if len(words) > cap:
        raise MemoryError(f"{len(words)} composite maps exceed the cap of {cap}")
    maps = []
    for w in words:
        f = spec.maps[w[0]]
        for a in w[1:]:
            f = compose(f, spec.maps[a])
        maps.append(f)
    T0 = spec.codespace.transitions
    T = [[T0[u[-1]][v[0]] for v in words] for u in words]
    init = [i for i, w in enumerate(words) if w[0] in spec.codespace.initial]
    S = Sft.from_matrix(T, init)
    _require_shift_closed(S)
    return SystemSpec(tuple(maps), S, spec.condensation, spec.ambient, None, spec.osc_asserted)


@dataclass(frozen=True)
class ContinuityRow:
    k: int | None
    s_k: float
    dim_h: float


def continuity_report(spec: SystemSpec, k_max: int, tol: float = 1e-12) -> list[ContinuityRow]:
    """Per-level roots ``s_k`` next to ``max(s_k, dim_H C)``; the last row (``k=None``) is the limit."""
    if k_max < 2:
        raise ValueError("need at least two levels")
    r = spec.ratios
    c = spec.condensation.hausdorff_dim
    rows = []
    for k in range(1, k_max + 1):
        s_k = moran_root(spec.codespace, r, k, tol)
        rows.append(ContinuityRow(k, s_k, max(s_k, c)))
    s = spectral_dim(spec.codespace, r, tol)
    rows.append(ContinuityRow(None, s, max(s, c)))
    return rows
