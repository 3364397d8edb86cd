import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isss import codespace as cs
from isss.codespace import RatioVector, Sft, golden_mean
from isss.geometry import AmbientBox
from systems import cantor_maps

UNIT = AmbientBox.make([0.0], [1.0])


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def words(*strings):
    """1-based strings such as "112" as 0-based tuples."""
    return [tuple(int(c) - 1 for c in s) for s in strings]


class TestSft:
    def test_golden_is_closed(self):
        assert cs.validate_shift_closed(golden_mean()) == []

    def test_restricted_initial_violates(self):
        S = Sft.from_matrix([[1, 1], [1, 0]], initial={1})
        assert cs.validate_shift_closed(S) == [(1, 0)]

    def test_full_shift_closed(self):
        assert cs.validate_shift_closed(Sft.full(3)) == []

    def test_dead_ends_pruned(self):
        # symbol 3 has no successor, so it can never start an infinite word
        S = Sft.from_matrix([[1, 1, 1], [1, 1, 0], [0, 0, 0]])
        assert S.initial == {0, 1}
        assert not S.matrix[:, 2].any()

    def test_admissible(self):
        S = golden_mean()
        assert S.admissible((0, 1, 0))
        assert not S.admissible((1, 1))


class TestLevelWords:
    def test_full_shift(self):
        assert len(cs.level_words(Sft.full(2), 3)) == 8

    def test_golden_level_three(self):
        assert cs.level_words(golden_mean(), 3) == words("111", "112", "121", "211", "212")

    def test_golden_level_one(self):
        assert cs.level_words(golden_mean(), 1) == [(0,), (1,)]

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            cs.level_words(Sft.full(2), 0)

    @pytest.mark.parametrize("k", range(1, 21))
    def test_fibonacci_counts(self, k):
        assert len(cs._level_array(golden_mean(), k)) == fib(k + 2)


class TestWordRatio:
    def test_cantor(self, thirds):
        assert cs.word_ratio(thirds, words("12")[0]) == pytest.approx(1 / 9)

    def test_mixed(self):
        assert cs.word_ratio(RatioVector.of(0.5, 0.25), words("212")[0]) == 1 / 32

    def test_single_symbol(self):
        assert cs.word_ratio(RatioVector.of(0.3, 0.6), (1,)) == 0.6


class TestStoppingSet:
    def test_cantor_point_two(self, thirds):
        assert cs.stopping_set(Sft.full(2), thirds, 0.2) == words("11", "12", "21", "22")

    @pytest.mark.parametrize("m", range(1, 8))
    def test_cantor_boundary(self, thirds, m):
        stops = cs.stopping_set(Sft.full(2), thirds, 3.0 ** -m)
        assert len(stops) == 2 ** (m + 1)
        assert {len(w) for w in stops} == {m + 1}

    def test_delta_one(self, halves):
        assert cs.stopping_set(golden_mean(), halves, 1.0) == [(0,), (1,)]

    @pytest.mark.parametrize("delta", [0.0, 1.5, -0.1])
    def test_out_of_range(self, thirds, delta):
        with pytest.raises(ValueError):
            cs.stopping_set(Sft.full(2), thirds, delta)

    @pytest.mark.parametrize("delta", [0.3, 0.1, 0.03, 0.007])
    def test_ratio_bracket(self, delta):
        r = RatioVector.of(0.5, 0.3, 0.2)
        S = Sft.from_matrix([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        for w in cs.stopping_set(S, r, delta):
            rho = cs.word_ratio(r, w)
            assert delta * r.rho_min <= rho < delta
            assert cs.word_ratio(r, w[:-1]) >= delta

    @pytest.mark.parametrize("delta", [0.3, 0.1, 0.03])
    def test_prefix_partition(self, golden, halves, delta):
        stops = set(cs.stopping_set(golden, halves, delta))
        for w in cs.sample_admissible(golden, 40, 500, seed=11):
            assert len(cs.stopping_prefixes(w, stops)) == 1


class TestWordsAtLeast:
    def test_cantor_level_four(self, thirds):
        assert len(cs.words_with_ratio_at_least(Sft.full(2), thirds, 3.0 ** -4)) == 30

    def test_cantor_half(self, thirds):
        assert cs.words_with_ratio_at_least(Sft.full(2), thirds, 0.5) == []

    def test_golden_quarter(self, golden, halves):
        assert len(cs.words_with_ratio_at_least(golden, halves, 0.25)) == 5

    def test_rejects_one(self, thirds):
        with pytest.raises(ValueError):
            cs.words_with_ratio_at_least(Sft.full(2), thirds, 1.0)


class TestCodeMetric:
    def test_equal(self, thirds):
        assert cs.code_metric(thirds, (0, 1), (0, 1)) == 0

    def test_first_symbols_differ(self, thirds):
        assert cs.code_metric(thirds, (0, 1), (1, 1)) == 1

    def test_common_prefix(self, thirds):
        a, b = words("112", "111")
        assert cs.code_metric(thirds, a, b) == pytest.approx(1 / 9)


word_triples = st.lists(st.integers(0, 1), min_size=6, max_size=6).map(tuple)


@settings(max_examples=100, deadline=None)
@given(word_triples, word_triples, word_triples)
def test_code_metric_ultrametric_for_equal_ratios(a, b, c):
    r = RatioVector.of(1 / 3, 1 / 3)
    ab, bc, ac = cs.code_metric(r, a, b), cs.code_metric(r, b, c), cs.code_metric(r, a, c)
    assert ab == cs.code_metric(r, b, a)
    assert ac <= max(ab, bc) + 1e-15


class TestTheta:
    def test_left_fixed_point(self):
        x, bound = cs.theta(cantor_maps(), (0,) * 10, [0.7], UNIT)
        assert x[0] == pytest.approx(0.7 * 3.0 ** -10)
        assert bound == pytest.approx(3.0 ** -10)

    def test_right_fixed_point(self):
        x, bound = cs.theta(cantor_maps(), (1,) * 20, [0.0], UNIT)
        assert abs(x[0] - 1.0) <= bound + 1e-15  # starting corner attains the bound

    def test_alternating_word(self):
        x, bound = cs.theta(cantor_maps(), (0, 1) * 10, [0.5], UNIT)
        assert abs(x[0] - 0.25) <= bound

    def test_start_independence(self):
        w = tuple(np.random.default_rng(2).integers(0, 2, 12))
        a, bound = cs.theta(cantor_maps(), w, [0.0], UNIT)
        b, _ = cs.theta(cantor_maps(), w, [1.0], UNIT)
        assert abs(a[0] - b[0]) <= 2 * bound

    def test_symbol_out_of_range(self):
        with pytest.raises(ValueError):
            cs.theta(cantor_maps(), (2,), [0.0], UNIT)


class TestSampling:
    def test_full_shift(self):
        ws = cs.sample_admissible(Sft.full(2), 5, 3, seed=7)
        assert len(ws) == 3
        assert all(len(w) == 5 and Sft.full(2).admissible(w) for w in ws)

    def test_golden_never_repeats_second_symbol(self, golden):
        for w in cs.sample_admissible(golden, 50, 200, seed=1):
            assert golden.admissible(w)
            assert all(not (a == 1 and b == 1) for a, b in zip(w, w[1:]))

    def test_deterministic(self, golden):
        assert cs.sample_admissible(golden, 9, 5, 3) == cs.sample_admissible(golden, 9, 5, 3)

    def test_rejects_bad_sizes(self, golden):
        with pytest.raises(ValueError):
            cs.sample_admissible(golden, 0, 5, 3)


def test_format_word_is_one_based():
    assert cs.format_word((0, 1, 1)) == "122"
    assert math.isclose(cs.word_ratio(RatioVector.of(0.5, 0.5), ()), 1.0)
