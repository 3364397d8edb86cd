import numpy as np
import pytest

from isss.construct import attractor_cloud, isss_cloud
from isss.geometry import AmbientBox, CondensationSet, Similarity, apply_many, directed_distance, hausdorff_distance
from isss.product import (
    ProductMap,
    cartesian,
    chaos_game,
    check_iosc,
    check_issc,
    condensation_weight,
    mean_fixed_point,
    moment_estimates,
    open_overlap_depth,
    product_measure_check,
    product_system,
)
from systems import UNIT, cantor_maps, dyadic_maps, make_spec

POINT = CondensationSet.points([[0.5]])


def cantor_with(p, C=POINT):
    return make_spec(cantor_maps(), C, probabilities=p)


class TestProductSystem:
    def test_cantor_square(self, cantor):
        P = product_system(cantor, cantor)
        assert len(P.combined.maps) == 4
        phi = P.combined.maps[3]
        assert phi.ratio == pytest.approx(1 / 3)
        assert phi((1.0, 1.0)) == pytest.approx((1.0, 1.0))

    def test_weight_example(self):
        p, q = (0.2, 0.4, 0.4), (0.1, 0.45, 0.45)
        P = product_system(cantor_with(p), cantor_with(q))
        assert P.condensation_weight == pytest.approx(0.28, abs=1e-15)
        assert sum(P.combined.probabilities[1:]) == pytest.approx(0.72, abs=1e-15)

    def test_weight_matches_closed_form(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(4))
            assert condensation_weight(p, q) == pytest.approx(p[0] + q[0] - p[0] * q[0], abs=1e-15)

    def test_equal_factor_weight(self):
        # p = q = (0.2, 0.4, 0.4): 0.2 * 0.8 + 0.2 * 0.8 + 0.04
        assert condensation_weight((0.2, 0.4, 0.4), (0.2, 0.4, 0.4)) == pytest.approx(0.36, abs=1e-15)

    def test_mixed_ratios(self):
        f = ProductMap(Similarity.line(0.5), Similarity.line(0.25))
        assert f.ratio == 0.5
        assert f((1.0, 1.0)) == pytest.approx((0.5, 0.25))

    def test_dimension_cap(self):
        planar = make_spec((Similarity.planar(0.5),), ambient=AmbientBox.make([0.0, 0.0], [1.0, 1.0]))
        three = product_system(planar, make_spec(cantor_maps())).combined
        with pytest.raises(ValueError):
            product_system(three, planar)

    def test_subshift_factor_rejected(self):
        from isss import golden_mean

        with pytest.raises(ValueError):
            product_system(make_spec(cantor_maps(), S=golden_mean()), make_spec(cantor_maps()))

    def test_attractor_is_cartesian_product(self, cantor):
        res = 3.0 ** -6
        P = product_system(cantor, cantor)
        A = attractor_cloud(P.combined, res)
        B = cartesian(attractor_cloud(cantor, res), attractor_cloud(cantor, res))
        assert hausdorff_distance(A, B, metric="max") <= 2 * res

    def test_super_self_similarity(self, cantor_point):
        res = 3.0 ** -6
        P = product_system(cantor_point, cantor_point)
        A = cartesian(isss_cloud(cantor_point, res), isss_cloud(cantor_point, res))
        images = np.vstack([apply_many(f, A.points) for f in P.combined.maps] + [[[0.5, 0.5]]])
        assert directed_distance(images, A.points, "max").max() <= 2 * res


class TestIssc:
    def test_cantor_point(self, cantor_point):
        rep = check_issc(cantor_point, 1e-3)
        assert rep.passed
        assert rep.min_map_separation == pytest.approx(1 / 3, abs=2e-3)
        assert rep.min_condensation_separation == pytest.approx(1 / 6, abs=2e-3)

    @pytest.mark.parametrize("margin", [1e-9, 1e-6, 1e-3])
    def test_dyadic_touching(self, margin):
        rep = check_issc(make_spec(dyadic_maps()), 1e-3, margin)
        assert not rep.maps_separated
        assert rep.witness == (1, 2)

    def test_transfers_to_product(self, cantor_point):
        margin = 0.05
        assert check_issc(cantor_point, 1e-2, margin).passed
        P = product_system(cantor_point, cantor_point)
        rep = check_issc(P, 1e-2, margin)
        assert rep.passed
        assert rep.min_map_separation >= check_issc(cantor_point, 1e-2).min_map_separation - 1e-2


class TestIosc:
    def test_conventional(self, cantor_point):
        rep = check_iosc(cantor_point, UNIT, "conventional")
        assert rep.passed
        assert rep.min_margin == pytest.approx(1 / 3)

    def test_as_stated_clause_fails(self, cantor_point):
        rep = check_iosc(cantor_point, UNIT, "as-stated")
        assert rep.images_inside and rep.images_disjoint
        assert not rep.condensation_clause and not rep.passed

    def test_as_stated_clause_holds_for_full_condensation(self):
        spec = make_spec(cantor_maps(), CondensationSet.segment([0.0], [1.0]))
        assert check_iosc(spec, UNIT, "as-stated").passed

    def test_dyadic_touching(self):
        rep = check_iosc(make_spec(dyadic_maps()), UNIT, "conventional")
        assert rep.passed
        assert rep.min_margin == pytest.approx(0.0, abs=1e-12)

    def test_overlap_detected(self):
        f, g = Similarity.line(0.6, 0.0), Similarity.line(0.6, 0.4)
        assert open_overlap_depth(f, g, UNIT) == pytest.approx(0.1)
        assert not check_iosc(make_spec((f, g)), UNIT).images_disjoint

    def test_product(self, cantor_point):
        P = product_system(cantor_point, cantor_point)
        assert check_iosc(P, P.combined.ambient, "conventional").passed

    def test_bad_variant(self, cantor_point):
        with pytest.raises(ValueError):
            check_iosc(cantor_point, UNIT, "strict")


class TestChaosGame:
    def test_cantor_moments(self):
        s = chaos_game(make_spec(cantor_maps(), probabilities=(0.0, 0.5, 0.5)), 10 ** 6, seed=1)
        m = moment_estimates(s, (1,))
        v = moment_estimates(s, (2,), center=[0.5])
        assert abs(m.mean - 0.5) <= 4 * m.stderr
        assert abs(v.mean - 0.125) <= 4 * v.stderr

    def test_point_condensation_mean(self):
        spec = cantor_with((0.2, 0.4, 0.4))
        s = chaos_game(spec, 4 * 10 ** 5, seed=2)
        m = moment_estimates(s, (1,))
        assert mean_fixed_point(spec)[0] == pytest.approx(0.5)
        assert abs(m.mean - 0.5) <= 4 * m.stderr

    def test_asymmetric_mean_equation(self):
        spec = make_spec((Similarity.line(0.5, 0.5, sign=-1), Similarity.line(0.25, 0.75)),
                         CondensationSet.points([[0.6], [0.65]]), probabilities=(0.1, 0.6, 0.3))
        s = chaos_game(spec, 4 * 10 ** 5, seed=3)
        m = moment_estimates(s, (1,))
        assert abs(m.mean - mean_fixed_point(spec)[0]) <= 4 * m.stderr

    def test_planar_mean_equation(self):
        spec = make_spec((Similarity.planar(0.5, 90.0, (0.5, 0.0)), Similarity.planar(0.4, 0.0, (0.1, 0.5))),
                         CondensationSet.disk((0.5, 0.5), 0.1), probabilities=(0.2, 0.5, 0.3),
                         ambient=AmbientBox.make([0.0, 0.0], [1.0, 1.0]))
        s = chaos_game(spec, 4 * 10 ** 5, seed=4)
        for axis in range(2):
            m = moment_estimates(s, tuple(int(i == axis) for i in range(2)))
            assert abs(m.mean - mean_fixed_point(spec)[axis]) <= 4 * m.stderr

    def test_pure_condensation(self):
        spec = make_spec(cantor_maps(), CondensationSet.segment([0.2], [0.6]), probabilities=(1.0, 0.0, 0.0))
        x = chaos_game(spec, 10 ** 4, seed=5).flat.ravel()
        assert x.min() >= 0.2 and x.max() <= 0.6
        assert x.mean() == pytest.approx(0.4, abs=0.01)

    def test_deterministic(self, cantor_point):
        spec = cantor_with((0.2, 0.4, 0.4))
        a, b = chaos_game(spec, 5000, seed=9), chaos_game(spec, 5000, seed=9)
        assert np.array_equal(a.points, b.points)

    def test_inside_ambient(self):
        x = chaos_game(cantor_with((0.2, 0.4, 0.4)), 10 ** 4, seed=6).flat
        assert UNIT.contains(x).all()

    def test_needs_probabilities(self, cantor_point):
        with pytest.raises(ValueError):
            chaos_game(cantor_point, 100)


class TestProductMeasure:
    def test_point_condensations(self):
        P = product_system(cantor_with((0.2, 0.4, 0.4)), cantor_with((0.1, 0.45, 0.45)))
        rep = product_measure_check(P, 2 * 10 ** 5, seed=1)
        assert rep.passed
        assert rep.weight_sum == pytest.approx(1.0, abs=1e-12)
        means = {c.orders: c.independent.mean for c in rep.comparisons}
        assert means[(1, 0)] == pytest.approx(0.5, abs=0.01)

    def test_segment_condensations(self):
        a = cantor_with((0.3, 0.35, 0.35), CondensationSet.segment([0.0], [0.4]))
        b = make_spec((Similarity.line(0.5, 0.0), Similarity.line(0.25, 0.75)), CondensationSet.points([[0.6]]),
                      probabilities=(0.25, 0.5, 0.25))
        rep = product_measure_check(product_system(a, b), 2 * 10 ** 5, seed=2)
        assert rep.passed

    def test_homogeneous_reduction(self):
        p = (0.0, 0.5, 0.5)
        P = product_system(make_spec(cantor_maps(), probabilities=p), make_spec(cantor_maps(), probabilities=p))
        assert P.condensation_weight == 0
        assert product_measure_check(P, 10 ** 5, seed=3).passed

    def test_needs_probabilities(self, cantor_point):
        P = product_system(cantor_point, cantor_point)
        with pytest.raises(ValueError):
            product_measure_check(P, 1000)
