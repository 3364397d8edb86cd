"""Products of inhomogeneous systems, separation conditions and invariant measures.

Product maps act as ``(x, y) -> (f_i(x), g_j(y))``. Distances on the
product use the max of the factor distances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import linprog

from .codespace import Sft
from .construct import SystemSpec, isss_cloud
from .geometry import AmbientBox, CondensationSet, PointCloud, Similarity, apply_many, directed_distance, discretize

MAX_PRODUCT_DIM = 4


@dataclass(frozen=True)
class ProductMap:
    """Block map ``(x, y) -> (f(x), g(y))``; Lipschitz constant ``max`` of the two ratios."""

    left: Similarity
    right: Similarity

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    @property
    def split(self) -> int:
        return self.left.dim

    @property
    def ratio(self) -> float:
        return max(self.left.ratio, self.right.ratio)

    @property
    def linear(self) -> np.ndarray:
        return block_diag(self.left.linear, self.right.linear)

    @property
    def offset(self) -> np.ndarray:
        return np.concatenate([self.left.offset, self.right.offset])

    def __call__(self, x):
        p = np.asarray(x, dtype=float)
        return tuple(float(v) for v in self.linear @ p + self.offset)


@dataclass(frozen=True)
class ProductSpec:
    left: SystemSpec
    right: SystemSpec
    combined: SystemSpec
    condensation_weight: float | None

    @property
    def split(self) -> int:
        return self.left.dim


def condensation_weight(p, q) -> float:
    """Total weight of the condensation part of the product measure."""
    p0, q0 = p[0], q[0]
    return q0 * sum(p[1:]) + p0 * sum(q[1:]) + p0 * q0


def product_system(a: SystemSpec, b: SystemSpec) -> ProductSpec:
    """Product of two full-shift systems, with product weights when both carry probabilities."""
    if a.dim + b.dim > MAX_PRODUCT_DIM:
        raise ValueError(f"product dimension {a.dim + b.dim} exceeds {MAX_PRODUCT_DIM}")
    if not (a.codespace.is_full and b.codespace.is_full):
        raise ValueError("products are only supported for full-shift factors")
    maps = tuple(ProductMap(f, g) for f in a.maps for g in b.maps)
    C = CondensationSet.product_of(a.condensation, b.condensation)
    probs, weight = None, None
    if a.probabilities is not None and b.probabilities is not None:
        p, q = a.probabilities, b.probabilities
        weight = condensation_weight(p, q)
        probs = (weight,) + tuple(pi * qj for pi in p[1:] for qj in q[1:])
    combined = SystemSpec(maps, Sft.full(len(maps)), C, a.ambient.product(b.ambient), probs,
                          a.osc_asserted and b.osc_asserted)
    return ProductSpec(a, b, combined, weight)


def cartesian(A: PointCloud, B: PointCloud) -> PointCloud:
    """Cartesian product of two clouds; resolution is the max under the product metric."""
    i, j = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
    pts = np.hstack([A.points[i.ravel()], B.points[j.ravel()]])
    box = A.box.product(B.box) if A.box is not None and B.box is not None else None
    return PointCloud(pts, max(A.resolution, B.resolution), box, empty=len(pts) == 0)


def _set_distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return float(directed_distance(a, b, metric).min())


@dataclass(frozen=True)
class IsscReport:
    maps_separated: bool
    condensation_separated: bool
    min_map_separation: float
    min_condensation_separation: float
    witness: tuple | None

    @property
    def passed(self) -> bool:
        return self.maps_separated and self.condensation_separated


def check_issc(system, resolution: float, margin: float = 0.0) -> IsscReport:
    """Inhomogeneous strong separation, checked on clouds of the inhomogeneous attractor.

    Separations are certified lower bounds: the cloud distance minus what
    the cloud resolutions can hide. Image sets ``f_i(A)`` must be pairwise
    farther apart than ``margin``, and each must be farther than ``margin``
    from ``C``. ``witness`` names the closest offending pair (``0`` stands
    for ``C``).
    """
    spec = system.combined if isinstance(system, ProductSpec) else system
    metric = "max" if isinstance(system, ProductSpec) else "euclidean"
    A = isss_cloud(spec.full_shift(), resolution)
    images = [apply_many(f, A.points) for f in spec.maps]
    slack = [f.ratio * A.resolution for f in spec.maps]
    best_map, best_c, witness = math.inf, math.inf, None
    for i, j in itertools.combinations(range(len(images)), 2):
        d = _set_distance(images[i], images[j], metric) - slack[i] - slack[j]
        if d < best_map:
            best_map = d
            if d <= margin:
                witness = (i + 1, j + 1)
    if not spec.condensation.is_empty:
        mesh = discretize(spec.condensation, resolution)
        for i, img in enumerate(images):
            d = _set_distance(img, mesh.points, metric) - slack[i] - mesh.resolution
            if d < best_c:
                best_c = d
                if d <= margin and witness is None:
                    witness = (i + 1, 0)
    return IsscReport(best_map > margin, best_c > margin, best_map, best_c, witness)


def _image_constraints(f, U: AmbientBox):
    """``f(U) = {x : lo < A^-1 (x - t) < hi}`` as ``G x <= h`` rows (strict part handled by slack)."""
    Ainv = np.linalg.inv(f.linear)
    lo, hi = np.asarray(U.lo), np.asarray(U.hi)
    c = Ainv @ f.offset
    # lo <= Ainv x - c  ->  -Ainv x <= -(lo + c);  Ainv x - c <= hi  ->  Ainv x <= hi + c
    G = np.vstack([-Ainv, Ainv])
    h = np.concatenate([-(lo + c), hi + c])
    scale = np.linalg.norm(G, axis=1)
    return G / scale[:, None], h / scale


def open_overlap_depth(f, g, U: AmbientBox) -> float:
    """Largest ``s`` such that some point sits ``s`` deep inside both ``f(U)`` and ``g(U)``.

    Positive means the open images intersect; zero means they only touch.
    """
    G1, h1 = _image_constraints(f, U)
    G2, h2 = _image_constraints(g, U)
    G, h = np.vstack([G1, G2]), np.concatenate([h1, h2])
    d = G.shape[1]
    # variables (x, s): maximize s subject to G x + s <= h
    A_ub = np.hstack([G, np.ones((len(G), 1))])
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    bound = 10.0 * (U.diameter + 1.0)
    res = linprog(cost, A_ub=A_ub, b_ub=h, bounds=[(None, None)] * d + [(-bound, bound)], method="highs")
    return float(-res.fun)


@dataclass(frozen=True)
class IoscReport:
    images_inside: bool
    images_disjoint: bool
    condensation_clause: bool
    min_margin: float
    variant: str

    @property
    def passed(self) -> bool:
        return self.images_inside and self.images_disjoint and self.condensation_clause


def check_iosc(system, U: AmbientBox, variant: str = "conventional", tol: float = 1e-12) -> IoscReport:
    """Inhomogeneous open set condition for the open box ``U``.

    ``variant="as-stated"`` requires ``U`` to sit inside the closure of ``C``;
    ``variant="conventional"`` instead requires ``C`` inside the closure of
    ``U``. ``min_margin`` is the smallest gap between two images; zero means
    the images touch without overlapping.
    """
    if variant not in ("as-stated", "conventional"):
        raise ValueError("variant must be 'as-stated' or 'conventional'")
    spec = system.combined if isinstance(system, ProductSpec) else system
    corners = U.corners()
    inside = all(np.all(U.contains(apply_many(f, corners), tol=tol)) for f in spec.maps)
    margin = math.inf
    for f, g in itertools.combinations(spec.maps, 2):
        # a common point sits -depth outside both images, so the gap is twice that
        margin = min(margin, -2.0 * open_overlap_depth(f, g, U))
    disjoint = margin >= -tol
    C = spec.condensation
    if variant == "as-stated":
        if C.is_empty:
            clause = False
        elif C.is_convex:
            clause = bool(np.all(C.contains(corners, tol=tol)))
        else:
            probe = discretize(CondensationSet.box(U.lo, U.hi), U.diameter / 64 + 1e-300).points
            clause = bool(np.all(C.contains(probe, tol=tol)))
    else:
        clause = C.is_empty or bool(np.all(U.contains(discretize(C, U.diameter / 64 + 1e-300).points, tol=tol)))
    return IoscReport(bool(inside), bool(disjoint), clause, max(margin, 0.0) if disjoint else margin, variant)


# ---------------------------------------------------------------------------
# measures


def sample_condensation(C: CondensationSet, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws from the uniform (counting, length, area) measure on ``C``."""
    s, p = C.shape, C.params
    if s == "empty":
        raise ValueError("cannot sample the empty set")
    if s == "points":
        pts = np.asarray(p, dtype=float)
        return pts[rng.integers(len(pts), size=n)]
    if s == "segment":
        a, b = np.asarray(p[0]), np.asarray(p[1])
        return a + rng.random(n)[:, None] * (b - a)
    if s == "circle":
        th = 2 * np.pi * rng.random(n)
        return np.asarray(p[0]) + p[1] * np.column_stack([np.cos(th), np.sin(th)])
    if s == "disk":
        th = 2 * np.pi * rng.random(n)
        r = p[1] * np.sqrt(rng.random(n))
        return np.asarray(p[0]) + r[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    if s == "box":
        lo, hi = np.asarray(p[0]), np.asarray(p[1])
        return lo + rng.random((n, len(lo))) * (hi - lo)
    if s == "union":
        which = rng.integers(len(p), size=n)
        out = np.empty((n, C.dim))
        for k, member in enumerate(p):
            sel = which == k
            out[sel] = sample_condensation(member, rng, int(sel.sum()))
        return out
    return np.hstack([sample_condensation(p[0], rng, n), sample_condensation(p[1], rng, n)])


@dataclass(frozen=True)
class MeasureSample:
    """Chaos-game output: ``points[k, w]`` is walker ``w`` after ``burn_in + k + 1`` steps."""

    points: np.ndarray
    seed: int
    burn_in: int
    n: int

    @property
    def walkers(self) -> int:
        return self.points.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.points.reshape(-1, self.points.shape[-1])[: self.n]


def _step_maps(spec: SystemSpec):
    L = np.stack([f.linear for f in spec.maps])
    t = np.stack([f.offset for f in spec.maps])
    return L, t


def _walk(L, t, probs, restart, x, steps, burn, rng):
    """Advance an ensemble of chains; ``restart(k)`` supplies fresh draws for ``k`` walkers."""
    W, d = x.shape
    out = np.empty((steps, W, d))
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    for step in range(burn + steps):
        choice = np.searchsorted(cum, rng.random(W), side="right")
        fresh = choice == 0
        mapped = ~fresh
        idx = choice[mapped] - 1
        x_new = np.empty_like(x)
        x_new[mapped] = np.einsum("nij,nj->ni", L[idx], x[mapped]) + t[idx]
        k = int(fresh.sum())
        if k:
            x_new[fresh] = restart(k, np.nonzero(fresh)[0])
        x = x_new
        if step >= burn:
            out[step - burn] = x
    return out


def _default_walkers(n: int) -> int:
    return max(1, min(1000, n))


def chaos_game(spec: SystemSpec, n: int, burn: int = 100, seed: int = 0, walkers: int | None = None,
               condensation_sampler=None) -> MeasureSample:
    """Random iteration for the inhomogeneous invariant measure.

    Each step applies ``f_i`` with probability ``p_i`` or restarts from a
    fresh draw of the condensation measure with probability ``p_0``. An
    ensemble of independent walkers advances in lockstep; after ``burn``
    discarded steps each records ``ceil(n / walkers)`` states.
    """
    if spec.probabilities is None:
        raise ValueError("chaos game needs a probability vector")
    if n < 1 or burn < 0:
        raise ValueError("need n >= 1 and burn >= 0")
    W = walkers or _default_walkers(n)
    steps = -(-n // W)
    rng = np.random.default_rng(seed)
    probs = np.asarray(spec.probabilities)
    if condensation_sampler is None:
        if probs[0] > 0:
            C = spec.condensation

            def condensation_sampler(k, _idx):
                return sample_condensation(C, rng, k)
        else:
            def condensation_sampler(k, _idx):
                raise AssertionError("restart drawn with zero condensation weight")
    L, t = _step_maps(spec)
    x0 = np.tile(spec.ambient.center, (W, 1))
    pts = _walk(L, t, probs, condensation_sampler, x0, steps, burn, rng)
    return MeasureSample(pts, seed, burn, n)


@dataclass(frozen=True)
class MomentEstimate:
    orders: tuple[int, ...]
    mean: float
    stderr: float


def moment_estimates(sample: MeasureSample, orders, center=None) -> MomentEstimate:
    """Mixed moment ``E[prod x_i**orders_i]`` with a standard error over walkers.

    Each walker's time average is one replicate, so serial correlation along
    a chain does not shrink the error.
    """
    x = sample.points
    if center is not None:
        x = x - np.asarray(center)
    vals = np.prod(x ** np.asarray(orders), axis=-1)
    per_walker = vals.mean(axis=0)
    W = len(per_walker)
    se = float(per_walker.std(ddof=1) / math.sqrt(W)) if W > 1 else math.inf
    return MomentEstimate(tuple(orders), float(per_walker.mean()), se)


def mixed_orders(dim: int, max_order: int) -> list[tuple[int, ...]]:
    return [o for o in itertools.product(range(max_order + 1), repeat=dim) if 1 <= sum(o) <= max_order]


def mean_fixed_point(spec: SystemSpec) -> np.ndarray:
    """Solve ``m = sum p_i (A_i m + t_i) + p_0 mean(nu)`` for the invariant mean."""
    p = np.asarray(spec.probabilities)
    L, t = _step_maps(spec)
    A = np.eye(spec.dim) - np.einsum("i,ijk->jk", p[1:], L)
    b = np.einsum("i,ij->j", p[1:], t)
    if p[0] > 0:
        b = b + p[0] * _condensation_mean(spec.condensation)
    return np.linalg.solve(A, b)


def _condensation_mean(C: CondensationSet) -> np.ndarray:
    s, q = C.shape, C.params
    if s == "points":
        return np.asarray(q, dtype=float).mean(axis=0)
    if s == "segment":
        return 0.5 * (np.asarray(q[0]) + np.asarray(q[1]))
    if s in ("circle", "disk"):
        return np.asarray(q[0], dtype=float)
    if s == "box":
        return 0.5 * (np.asarray(q[0]) + np.asarray(q[1]))
    if s == "union":
        return np.mean([_condensation_mean(m) for m in q], axis=0)
    if s == "product":
        return np.concatenate([_condensation_mean(q[0]), _condensation_mean(q[1])])
    raise ValueError("empty condensation set has no mean")


def decomposition_sampler(pspec: ProductSpec, burn: int, seed: int, walkers: int):
    """Draws from the mixture measure that makes the product measure self-similar.

    The components ``mu_1 o f_i^-1 x nu_2``, ``nu_1 x mu_2 o g_j^-1`` and
    ``nu_1 x nu_2`` carry weights ``p_i q_0``, ``p_0 q_j`` and ``p_0 q_0``.
    Draws from ``mu_1`` and ``mu_2`` come from auxiliary factor chains that
    advance one step per call.
    """
    a, b = pspec.left, pspec.right
    p, q = np.asarray(a.probabilities), np.asarray(b.probabilities)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    La, ta = _step_maps(a)
    Lb, tb = _step_maps(b)
    weights = np.concatenate([p[1:] * q[0], p[0] * q[1:], [p[0] * q[0]]])
    total = weights.sum()
    if total == 0:
        def never(k, _idx):
            raise AssertionError("restart drawn with zero condensation weight")
        return never
    weights = weights / total
    N, M = len(a.maps), len(b.maps)

    def nu1(k):
        return sample_condensation(a.condensation, rng, k)

    def nu2(k):
        return sample_condensation(b.condensation, rng, k)

    xa = np.tile(a.ambient.center, (walkers, 1))
    xb = np.tile(b.ambient.center, (walkers, 1))

    def advance(x, L, t, probs, nu):
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        choice = np.searchsorted(cum, rng.random(len(x)), side="right")
        fresh = choice == 0
        out = np.empty_like(x)
        idx = choice[~fresh] - 1
        out[~fresh] = np.einsum("nij,nj->ni", L[idx], x[~fresh]) + t[idx]
        if fresh.any():
            out[fresh] = nu(int(fresh.sum()))
        return out

    state = {"a": xa, "b": xb}
    for _ in range(burn):
        state["a"] = advance(state["a"], La, ta, p, nu1)
        state["b"] = advance(state["b"], Lb, tb, q, nu2)

    def sampler(k, idx):
        state["a"] = advance(state["a"], La, ta, p, nu1)
        state["b"] = advance(state["b"], Lb, tb, q, nu2)
        comp = rng.choice(len(weights), size=k, p=weights)
        out = np.empty((k, a.dim + b.dim))
        for c in np.unique(comp):
            sel = comp == c
            m = int(sel.sum())
            if c < N:
                left = state["a"][idx[sel]] @ La[c].T + ta[c]
                right = nu2(m)
            elif c < N + M:
                j = c - N
                left = nu1(m)
                right = state["b"][idx[sel]] @ Lb[j].T + tb[j]
            else:
                left, right = nu1(m), nu2(m)
            out[sel] = np.hstack([left, right])
        return out

    return sampler


@dataclass(frozen=True)
class MomentComparison:
    orders: tuple[int, ...]
    independent: MomentEstimate
    decomposed: MomentEstimate
    z: float


@dataclass(frozen=True)
class ProductMeasureReport:
    weight_sum: float
    condensation_weight: float
    comparisons: list[MomentComparison]
    bands: float

    @property
    def passed(self) -> bool:
        return abs(self.weight_sum - 1.0) <= 1e-12 and all(abs(c.z) <= self.bands for c in self.comparisons)


def product_measure_check(pspec: ProductSpec, n: int, seed: int = 0, max_order: int = 2,
                          burn: int = 100, bands: float = 4.0, walkers: int | None = None) -> ProductMeasureReport:
    """Compare the product of the factor measures with the decomposed product chain.

    Sample A pairs independent factor chaos games; sample B runs the product
    system with weights ``p_i q_j`` and restarts drawn from the mixture
    measure. All mixed moments up to ``max_order`` are compared with
    ``bands`` standard errors.
    """
    a, b, comb = pspec.left, pspec.right, pspec.combined
    if a.probabilities is None or b.probabilities is None:
        raise ValueError("both factors need probability vectors")
    W = walkers or _default_walkers(n)
    ss = np.random.SeedSequence(seed).spawn(3)
    seeds = [int(s.generate_state(1)[0]) for s in ss]
    sa = chaos_game(a, n, burn, seeds[0], W)
    sb = chaos_game(b, n, burn, seeds[1], W)
    pair = MeasureSample(np.concatenate([sa.points, sb.points], axis=-1), seed, burn, n)
    sampler = decomposition_sampler(pspec, burn, seeds[2], W)
    dec = chaos_game(comb, n, burn, seeds[2], W, condensation_sampler=sampler)
    comps = []
    for o in mixed_orders(comb.dim, max_order):
        ea, eb = moment_estimates(pair, o), moment_estimates(dec, o)
        se = math.hypot(ea.stderr, eb.stderr)
        z = (ea.mean - eb.mean) / se if se > 0 else (0.0 if ea.mean == eb.mean else math.inf)
        comps.append(MomentComparison(o, ea, eb, z))
    weight_sum = sum(comb.probabilities[1:]) + pspec.condensation_weight
    return ProductMeasureReport(weight_sum, pspec.condensation_weight, comps, bands)
