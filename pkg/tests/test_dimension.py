import math
import warnings

import numpy as np
import pytest

from isss import codespace as cs
from isss.codespace import RatioVector, Sft, golden_mean
from isss.dimension import (
    DivergentSeries,
    dim_limit,
    isss_dim_report,
    level_sums,
    moran_root,
    spectral_dim,
    spectral_radius,
    tail_mass,
    tau,
)
from isss.geometry import CondensationSet
from systems import CANTOR_DIM, GOLDEN_DIM

PHI = (1 + math.sqrt(5)) / 2


def brute_level_sum(S, r, s, k):
    return sum(cs.word_ratio(r, w) ** s for w in cs.level_words(S, k))


class TestMoranRoot:
    @pytest.mark.parametrize("k", [1, 2, 5, 9])
    def test_cantor_every_level(self, thirds, k):
        assert moran_root(Sft.full(2), thirds, k) == pytest.approx(CANTOR_DIM, abs=1e-12)

    def test_golden_first_level(self, golden, halves):
        assert moran_root(golden, halves, 1) == pytest.approx(1.0, abs=1e-12)

    def test_golden_second_level(self, golden, halves):
        assert moran_root(golden, halves, 2) == pytest.approx(math.log2(3) / 2, abs=1e-12)

    def test_root_solves_level_equation(self):
        S = Sft.from_matrix([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        r = RatioVector.of(0.5, 0.3, 0.2)
        for k in (1, 3, 6):
            s = moran_root(S, r, k)
            assert brute_level_sum(S, r, s, k) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("k", [1, 4, 7])
    def test_count_classes_match_enumeration(self, k):
        from collections import Counter

        from isss.dimension import _count_classes

        S = Sft.from_matrix([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        classes, mult = _count_classes(S, k)
        got = {tuple(int(c) for c in row): int(n) for row, n in zip(classes, mult)}
        want = Counter(tuple(w.count(a) for a in range(3)) for w in cs.level_words(S, k))
        assert got == dict(want)

    def test_level_sum_decreasing(self, golden):
        r = RatioVector.of(0.4, 0.7)
        rng = np.random.default_rng(0)
        for s in rng.random(20) * 2:
            for k in (1, 4, 8):
                assert level_sums(golden, r, s + 0.1, k)[-1] < level_sums(golden, r, s, k)[-1]

    def test_bracket_guarantee(self, golden, halves):
        for k in range(1, 12):
            count = len(cs.level_words(golden, k))
            upper = math.log(count) / (k * math.log(2))
            assert brute_level_sum(golden, halves, 0.0, k) - 1 >= 0
            assert brute_level_sum(golden, halves, upper, k) - 1 <= 1e-12

    def test_beyond_enumeration_cap(self):
        # 3**14 words exceed the cap; the transfer recurrence takes over
        r = RatioVector.of(0.2, 0.3, 0.4)
        s = moran_root(Sft.full(3), r, 14)
        assert sum(x ** s for x in r.ratios) == pytest.approx(1.0, abs=1e-10)

    def test_invalid_arguments(self, thirds):
        with pytest.raises(ValueError):
            moran_root(Sft.full(2), thirds, 0)
        with pytest.raises(ValueError):
            moran_root(Sft.full(2), thirds, 2, tol=0.0)


class TestDimLimit:
    def test_cantor_converges_at_two(self, thirds):
        seq = dim_limit(Sft.full(2), thirds, k_max=2)
        assert seq.converged
        assert seq.s_estimate == pytest.approx(CANTOR_DIM, abs=1e-12)

    def test_golden_fibonacci(self, golden, halves):
        seq = dim_limit(golden, halves, k_max=20)
        assert seq.s_estimate == pytest.approx(math.log2(17711) / 20, abs=1e-10)
        assert abs(seq.s_estimate - GOLDEN_DIM) <= 0.012
        ks = [s for _, s in seq.s_values]
        assert all(a > b for a, b in zip(ks[1:], ks[2:]))

    def test_single_map(self):
        seq = dim_limit(Sft.full(1), RatioVector.of(0.5), k_max=5)
        assert all(s == 0 for _, s in seq.s_values)

    def test_rejects_short_runs(self, thirds):
        with pytest.raises(ValueError):
            dim_limit(Sft.full(2), thirds, k_max=1)


class TestTau:
    def test_cantor_at_dimension(self, thirds):
        assert all(v == pytest.approx(1.0, abs=1e-12) for _, v in tau(Sft.full(2), thirds, CANTOR_DIM, 8))

    def test_golden_level_twenty(self, golden, halves):
        k, v = tau(golden, halves, GOLDEN_DIM, 20)[-1]
        assert k == 20
        assert v == pytest.approx(17711 ** (1 / 20) * 2 ** -GOLDEN_DIM, rel=1e-12)

    def test_zero_exponent_counts(self, golden, halves):
        for k, v in tau(golden, halves, 0.0, 10):
            assert v == pytest.approx(len(cs.level_words(golden, k)) ** (1 / k))

    def test_moves_toward_one(self, golden, halves):
        s = dim_limit(golden, halves, 20).s_estimate
        t = dict(tau(golden, halves, s, 20))
        assert abs(t[20] - 1) <= abs(t[2] - 1)

    def test_negative_exponent(self, golden, halves):
        with pytest.raises(ValueError):
            tau(golden, halves, -0.1, 3)


class TestSpectral:
    def test_radius_of_golden_matrix(self):
        assert spectral_radius(np.array([[1.0, 1.0], [1.0, 0.0]])) == pytest.approx(PHI, abs=1e-12)

    def test_radius_periodic_matrix(self):
        assert spectral_radius(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx(2.0, abs=1e-12)

    def test_radius_against_eigvals(self):
        M = np.random.default_rng(4).random((6, 6))
        assert spectral_radius(M) == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)

    def test_cantor(self, thirds):
        assert spectral_dim(Sft.full(2), thirds) == pytest.approx(CANTOR_DIM, abs=1e-9)

    def test_golden(self, golden, halves):
        assert spectral_dim(golden, halves) == pytest.approx(GOLDEN_DIM, abs=1e-9)

    def test_self_loop(self):
        assert spectral_dim(Sft.full(1), RatioVector.of(0.5)) == 0

    def test_reducible_warns(self):
        S = Sft.from_matrix([[1, 1, 0], [0, 1, 1], [0, 1, 1]])
        with pytest.warns(RuntimeWarning):
            s = spectral_dim(S, RatioVector.of(0.5, 0.5, 0.5))
        assert s == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("T,r", [
        ([[1, 1], [1, 0]], (0.4, 0.7)),
        ([[1, 1, 0], [0, 1, 1], [1, 0, 1]], (0.5, 0.3, 0.2)),
        ([[0, 1, 1], [1, 0, 1], [1, 1, 1]], (0.3, 0.3, 0.45)),
    ])
    def test_agrees_with_moran_sequence(self, T, r):
        S, rv = Sft.from_matrix(T), RatioVector.of(*r)
        assert abs(dim_limit(S, rv, 20).s_estimate - spectral_dim(S, rv)) <= 0.02


class TestTailMass:
    def test_cantor_point_eight(self, thirds):
        q = 2 * 3 ** -0.8
        lo, hi = tail_mass(Sft.full(2), thirds, 0.8)
        assert lo <= q / (1 - q) <= hi

    def test_cantor_two(self, thirds):
        lo, hi = tail_mass(Sft.full(2), thirds, 2.0)
        assert lo == pytest.approx(2 / 7, rel=1e-12)
        assert hi == pytest.approx(2 / 7, rel=1e-12)

    def test_divergent(self, thirds):
        with pytest.raises(DivergentSeries):
            tail_mass(Sft.full(2), thirds, 0.6)

    def test_golden_brackets_exact_sum(self, golden, halves):
        # sum over all words = row sums of M (I - M)^-1 started from the initial symbols
        t = GOLDEN_DIM + 0.1
        M = golden.matrix * 0.5 ** t
        v = np.full(2, 0.5 ** t)
        exact = float(v @ np.linalg.solve(np.eye(2) - M, np.ones(2)))
        lo, hi = tail_mass(golden, halves, t)
        assert lo <= exact <= hi


DELTAS = [2.0 ** -j for j in range(2, 11)]


@pytest.mark.parametrize("system", ["cantor", "golden"])
def test_counting_bounds(system):
    if system == "cantor":
        S, r, s = Sft.full(2), RatioVector.of(1 / 3, 1 / 3), CANTOR_DIM
    else:
        S, r, s = golden_mean(), RatioVector.of(0.5, 0.5), GOLDEN_DIM
    t = s + 0.1
    _, m_up = tail_mass(S, r, t)
    for d in DELTAS:
        assert len(cs.stopping_set(S, r, d)) <= m_up * r.rho_min ** -t * d ** -t
        big = cs.words_with_ratio_at_least(S, r, d)
        assert len(big) <= m_up * (math.log(d) / math.log(r.rho_max)) * d ** -t


class TestReport:
    def test_cantor_point(self):
        rep = isss_dim_report(CANTOR_DIM, CondensationSet.points([[0.5]]), CANTOR_DIM, CANTOR_DIM)
        assert rep.hausdorff_isss == pytest.approx(CANTOR_DIM)
        assert rep.box_exact == pytest.approx(CANTOR_DIM)

    def test_quarter_segment(self):
        rep = isss_dim_report(0.5, CondensationSet.segment([0.0], [1.0]), 0.5, 0.5)
        assert (rep.hausdorff_isss, rep.box_lower_bound, rep.box_upper_bound, rep.box_exact) == (1, 1, 1, 1)

    def test_empty_reduces(self):
        rep = isss_dim_report(0.7, CondensationSet.empty(), 0.6, 0.7)
        assert (rep.hausdorff_isss, rep.box_lower_bound, rep.box_upper_bound) == (0.7, 0.6, 0.7)

    def test_without_osc(self):
        rep = isss_dim_report(0.7, CondensationSet.empty(), 0.0, 0.7, osc_asserted=False)
        assert rep.upper_bound_only and rep.box_exact is None

    def test_inconsistent_box_dims(self):
        with pytest.raises(ValueError):
            isss_dim_report(0.7, CondensationSet.empty(), 0.8, 0.7)


def test_empty_level_warns():
    # both symbols are dead ends, so pruning leaves no admissible words
    S = Sft.from_matrix([[0, 1], [0, 0]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert moran_root(S, RatioVector.of(0.5, 0.5), 3) == 0.0
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
