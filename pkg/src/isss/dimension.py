"""Moran-equation solvers and dimension reports.

The level sum ``a_k(s) = sum over admissible words w of length k of rho_w**s``
is the basic quantity. Its per-level root ``s_k`` converges to the
dimension ``s`` of the symbolic set, which is independently obtained as the
point where the spectral radius of ``M(s)[i, j] = T[i, j] * rho_j**s``
equals one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .codespace import RatioVector, Sft
from .geometry import CondensationSet

ENUMERATION_CAP = 2_000_000


class DivergentSeries(ValueError):
    """The word series at exponent ``t`` does not converge."""


def _check(S: Sft, r: RatioVector):
    if len(r) != S.alphabet_size:
        raise ValueError("ratio vector and SFT alphabet differ in size")


def transfer_matrix(S: Sft, r: RatioVector, s: float) -> np.ndarray:
    return S.matrix * np.asarray(r.ratios) ** s


def level_sums(S: Sft, r: RatioVector, s: float, k_max: int) -> np.ndarray:
    """``a_1(s) .. a_kmax(s)`` by the vector recurrence, no enumeration."""
    _check(S, r)
    M = transfer_matrix(S, r, s)
    v = np.zeros(S.alphabet_size)
    idx = sorted(S.initial)
    v[idx] = np.asarray(r.ratios)[idx] ** s
    out = np.empty(k_max)
    for k in range(k_max):
        out[k] = v.sum()
        v = v @ M
    return out


def level_count(S: Sft, k: int) -> int:
    return int(round(level_sums(S, RatioVector.of([0.5] * S.alphabet_size), 0.0, k)[-1]))


def _count_classes(S: Sft, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Symbol-count vectors of the admissible ``k``-words and how many words share each.

    A word's ratio depends only on how often each symbol occurs, so the
    words are tallied by (last symbol, counts) one letter at a time.
    """
    m, base = S.alphabet_size, k + 1
    place = base ** np.arange(m - 1, -1, -1, dtype=np.int64)
    last = np.array(sorted(S.initial), dtype=np.int64)
    key, mult = place[last], np.ones(len(last), dtype=np.int64)
    for _ in range(k - 1):
        parent, child = np.nonzero(S.matrix[last])
        state = child * base ** m + key[parent] + place[child]
        state, inverse = np.unique(state, return_inverse=True)
        mult = np.bincount(inverse, weights=mult[parent]).astype(np.int64)
        last, key = np.divmod(state, base ** m)
    key, inverse = np.unique(key, return_inverse=True)
    mult = np.bincount(inverse, weights=mult).astype(np.int64)
    classes = np.empty((len(key), m))
    for a in reversed(range(m)):
        key, classes[:, a] = np.divmod(key, base)
    return classes, mult


class _LevelSum:
    """Callable ``s -> a_k(s) - 1`` backed by enumeration when small enough."""

    def __init__(self, S: Sft, r: RatioVector, k: int):
        self.count = level_count(S, k)
        self.log_ratios = None
        m = S.alphabet_size
        if 0 < self.count <= ENUMERATION_CAP and (k + 1) ** m < 2 ** 62:
            classes, self.multiplicity = _count_classes(S, k)
            self.log_ratios = classes @ np.log(np.asarray(r.ratios))
        self.S, self.r, self.k = S, r, k

    def __call__(self, s: float) -> float:
        if self.log_ratios is not None:
            return float(self.multiplicity @ np.exp(s * self.log_ratios)) - 1.0
        return float(level_sums(self.S, self.r, s, self.k)[-1]) - 1.0


def _bisect(g, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Root of a decreasing function with ``g(lo) >= 0 >= g(hi)``."""
    glo, ghi = g(lo), g(hi)
    if glo <= 0:
        return lo
    if ghi >= 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol and hi - lo <= tol:
            return mid
        if gm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def moran_root(S: Sft, r: RatioVector, k: int, tol: float = 1e-12) -> float:
    """Root ``s_k`` of ``sum over S^k of rho_w**s = 1`` by bisection.

    An empty level gives 0 with a warning rather than an error.
    """
    _check(S, r)
    if k < 1:
        raise ValueError("level must be positive")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    g = _LevelSum(S, r, k)
    if g.count == 0:
        warnings.warn("empty level set; dimension taken as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    upper = math.log(g.count) / (k * math.log(1.0 / r.rho_max))
    return _bisect(g, 0.0, upper, tol)


@dataclass(frozen=True)
class MoranSequence:
    s_values: list[tuple[int, float]]
    s_estimate: float
    converged: bool
    bracket_tolerance: float


def dim_limit(S: Sft, r: RatioVector, k_max: int = 20, tol: float = 1e-9) -> MoranSequence:
    if k_max < 2:
        raise ValueError("need at least two levels")
    vals = [(k, moran_root(S, r, k, tol=min(tol, 1e-12))) for k in range(1, k_max + 1)]
    converged = abs(vals[-1][1] - vals[-2][1]) < tol
    return MoranSequence(vals, vals[-1][1], converged, min(tol, 1e-12))


def tau(S: Sft, r: RatioVector, s: float, k_max: int) -> list[tuple[int, float]]:
    """Finite-level approximants ``(a_k(s))**(1/k)``."""
    if s < 0:
        raise ValueError("exponent must be nonnegative")
    a = level_sums(S, r, s, k_max)
    return [(k, float(a[k - 1] ** (1.0 / k))) for k in range(1, k_max + 1)]


def spectral_radius(M: np.ndarray, tol: float = 1e-14, max_iter: int = 100_000) -> float:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates on ``M + I`` (same Perron vector, no periodic oscillation) and
    stops when the Collatz-Wielandt bounds ``min(Mx/x) <= rho <= max(Mx/x)``
    close to ``tol``.
    """
    n = M.shape[0]
    if not M.any():
        return 0.0
    shifted = M + np.eye(n)
    x = np.ones(n)
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = shifted @ x
        pos = x > 1e-300
        q = y[pos] / x[pos]
        lo, hi = q.min() - 1.0, q.max() - 1.0
        x = y / np.linalg.norm(y)
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _components(S: Sft) -> list[np.ndarray]:
    """Strongly connected components with at least one cycle, restricted to reachable symbols."""
    T = S.matrix
    n = S.alphabet_size
    reach = np.zeros(n, dtype=bool)
    frontier = list(S.initial)
    reach[frontier] = True
    while frontier:
        nxt = np.nonzero(T[frontier].any(axis=0) & ~reach)[0]
        reach[nxt] = True
        frontier = list(nxt)
    _, labels = connected_components(T.astype(int), directed=True, connection="strong")
    comps = []
    for lab in np.unique(labels):
        members = np.nonzero((labels == lab) & reach)[0]
        if len(members) and T[np.ix_(members, members)].any():
            comps.append(members)
    return comps


def spectral_dim(S: Sft, r: RatioVector, tol: float = 1e-12) -> float:
    """Exponent at which the transfer matrix has spectral radius one.

    For a reducible shift the answer is the largest value over the cyclic
    components, with a warning.
    """
    _check(S, r)
    comps = _components(S)
    if len(comps) > 1:
        warnings.warn("reducible SFT; using its dominant component", RuntimeWarning, stacklevel=2)
    best = 0.0
    ratios = np.asarray(r.ratios)
    T = S.matrix
    for members in comps:
        Tc = T[np.ix_(members, members)]
        rc = ratios[members]

        def g(s, Tc=Tc, rc=rc):
            return spectral_radius(Tc * rc ** s) - 1.0

        count = spectral_radius(Tc.astype(float))
        if count <= 1.0 + 1e-12:
            continue
        upper = math.log(count) / math.log(1.0 / rc.max()) + 1e-9
        best = max(best, _bisect(g, 0.0, upper, tol))
    return best


def tail_mass(S: Sft, r: RatioVector, t: float, K: int = 64, lookback: int = 8) -> tuple[float, float]:
    """Bracket for the total mass ``sum over all admissible words of rho_w**t``.

    The lower end is the partial sum through level ``K``; the upper end adds a
    geometric tail whose ratio is the largest of the last few level-to-level
    ratios and the Collatz-Wielandt upper bound of the transfer matrix.
    """
    a = level_sums(S, r, t, K + 1)
    if a[K - 1] ** (1.0 / K) >= 1.0:
        raise DivergentSeries(f"series diverges at t={t}: level-{K} root is not below 1")
    lower = float(a[:K].sum())
    ratios = a[K - lookback + 1:K + 1] / a[K - lookback:K]
    M = transfer_matrix(S, r, t)
    q = max(float(ratios.max()), spectral_radius(M))
    if q >= 1.0:
        raise DivergentSeries(f"series diverges at t={t}: growth ratio {q:.6g} >= 1")
    # the tail bound is exact for equal ratios, so pad against rounding
    return lower, float(lower + a[K - 1] * q / (1.0 - q)) * (1.0 + 1e-12)


@dataclass(frozen=True)
class DimReport:
    s: float
    hausdorff_isss: float
    box_lower_bound: float
    box_upper_bound: float
    tau_at_s: list[tuple[int, float]] = field(default_factory=list)
    box_exact: float | None = None
    upper_bound_only: bool = False


def isss_dim_report(s: float, C: CondensationSet, lower_box_E: float, upper_box_E: float,
                    tau_at_s=None, osc_asserted: bool = True) -> DimReport:
    """Dimensions of ``E u O_S`` from the symbolic dimension and the condensation set.

    Without the open set condition ``s`` is only an upper bound for the
    dimensions of ``E``, and the report says so.
    """
    if not lower_box_E <= upper_box_E:
        raise ValueError("lower box dimension exceeds upper box dimension")
    haus = max(s, C.hausdorff_dim)
    upper = max(s, C.upper_box_dim)
    lower = max(lower_box_E, C.lower_box_dim)
    exact = None
    if C.lower_box_dim == C.upper_box_dim and osc_asserted:
        exact = max(s, C.upper_box_dim)
    return DimReport(s, haus, lower, upper, list(tau_at_s or []), exact, not osc_asserted)
