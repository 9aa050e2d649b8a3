import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import maxentkit as mk
from maxentkit.problem import TargetSet

from oracles import grid_projection_argmin, grid_support_function


def vectors(dim, lo=-5.0, hi=5.0):
    return st.lists(
        st.floats(min_value=lo, max_value=hi, allow_nan=False), min_size=dim, max_size=dim
    ).map(np.array)


@pytest.fixture
def box2():
    return TargetSet.box([0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def bp():
    return TargetSet.box_parabola(0.1, 0.1)


class TestSupportFunction:
    def test_box_symmetry(self, box2):
        assert mk.support_function(box2, np.array([1.0, -1.0])) == pytest.approx(2.0)

    def test_zero_vector(self, box2, bp):
        ball = TargetSet.ball([0.3, -0.2], 0.7)
        for T in (box2, bp, ball):
            assert mk.support_function(T, np.zeros(T.dim)) == 0.0

    def test_box_parabola_first_axis(self, bp):
        # maximal x1 over the set is sqrt(l2)
        assert mk.support_function(bp, np.array([1.0, 0.0])) == pytest.approx(np.sqrt(0.1))

    def test_box_parabola_against_grid(self, bp):
        rng = np.random.default_rng(7)
        for _ in range(40):
            z = rng.normal(size=2) * 3.0
            ref = grid_support_function(0.1, 0.1, z)
            assert mk.support_function(bp, z) == pytest.approx(ref, abs=1e-4)

    def test_dimension_mismatch(self, box2):
        with pytest.raises(ValueError):
            mk.support_function(box2, np.array([1.0, 2.0, 3.0]))

    @given(vectors(2), vectors(2))
    def test_sublinear(self, z1, z2):
        T = TargetSet.box([0.5, -0.25], [1.0, 2.0])
        s = mk.support_function
        assert s(T, z1 + z2) <= s(T, z1) + s(T, z2) + 1e-9

    @given(vectors(2), st.floats(min_value=0.0, max_value=10.0))
    def test_positively_homogeneous(self, z, lam):
        T = TargetSet.ball([0.1, 0.2], 0.5)
        assert mk.support_function(T, lam * z) == pytest.approx(
            lam * mk.support_function(T, z), abs=1e-9
        )

    def test_dominates_inner_products(self, bp):
        rng = np.random.default_rng(3)
        # sample points of T by projecting random points into it
        pts = [mk.project_onto_target(bp, rng.normal(size=2)) for _ in range(25)]
        for _ in range(25):
            z = rng.normal(size=2) * 2.0
            sigma = mk.support_function(bp, z)
            for x in pts:
                assert x @ z <= sigma + 1e-9


class TestProjection:
    def test_box_clamp(self):
        T = TargetSet.box([0.5, 0.5], [0.5, 0.5])  # the unit square
        np.testing.assert_allclose(
            mk.project_onto_target(T, np.array([2.0, -1.0])), [1.0, 0.0]
        )

    def test_fixed_point(self, box2, bp):
        for T, x in ((box2, np.array([0.3, -0.8])), (bp, np.array([0.2, 0.06]))):
            np.testing.assert_allclose(mk.project_onto_target(T, x), x, atol=1e-12)

    def test_box_parabola_against_grid_argmin(self, bp):
        y = np.array([0.5, 0.0])
        p = mk.project_onto_target(bp, y)
        ref, ref_d = grid_projection_argmin(0.1, 0.1, y)
        assert np.linalg.norm(p - ref) < 1e-3
        assert np.linalg.norm(p - y) == pytest.approx(ref_d, abs=1e-4)

    @given(vectors(2), vectors(2))
    @settings(max_examples=50, deadline=None)
    def test_nonexpansive(self, a, b):
        T = TargetSet.box_parabola(0.05, 0.3)
        pa = mk.project_onto_target(T, a)
        pb = mk.project_onto_target(T, b)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-9

    @given(vectors(2))
    @settings(max_examples=50, deadline=None)
    def test_idempotent_and_feasible(self, y):
        T = TargetSet.box_parabola(-0.2, 0.5)
        p = mk.project_onto_target(T, y)
        assert mk.distance_to_target(T, p) <= 1e-10
        np.testing.assert_allclose(mk.project_onto_target(T, p), p, atol=1e-9)

    def test_ball_radial(self):
        T = TargetSet.ball([0.0, 0.0], 1.0)
        p = mk.project_onto_target(T, np.array([3.0, 4.0]))
        np.testing.assert_allclose(p, [0.6, 0.8])


class TestDistance:
    def test_box_outside(self):
        T = TargetSet.box([0.5, 0.5], [0.5, 0.5])
        assert mk.distance_to_target(T, np.array([2.0, 0.0])) == pytest.approx(1.0)
        assert mk.distance_to_target(T, np.array([2.0, 2.0])) == pytest.approx(np.sqrt(2.0))

    def test_inside_zero(self, bp):
        assert mk.distance_to_target(bp, np.array([0.2, 0.08])) == 0.0


class TestOperatorNormBound:
    @pytest.mark.parametrize(
        "lo,hi,M,expected",
        [(0.0, 1.0, 3, 3.0), (0.0, 2.0, 2, 6.0), (-0.5, 0.5, 3, 0.875)],
    )
    def test_values(self, lo, hi, M, expected):
        prob = mk.MomentProblem(
            support=mk.SupportInterval(lo, hi),
            order=M,
            observed=np.zeros(M),
            uncertainty=np.zeros(M),
        )
        assert mk.operator_norm_bound(prob) == pytest.approx(expected)


class TestValidation:
    def test_interval_order(self):
        with pytest.raises(ValueError):
            mk.SupportInterval(1.0, 0.0)
        with pytest.raises(ValueError):
            mk.SupportInterval(0.0, np.inf)

    def test_box_parabola_interior(self):
        with pytest.raises(ValueError):
            TargetSet.box_parabola(0.5, 0.2)

    def test_negative_uncertainty(self):
        with pytest.raises(ValueError):
            mk.MomentProblem(
                support=mk.SupportInterval(0, 1),
                order=2,
                observed=np.array([0.5, 0.3]),
                uncertainty=np.array([0.01, -0.01]),
            )

    def test_discrete_reference_checks(self):
        with pytest.raises(ValueError):
            mk.ReferenceMeasure(kind="discrete", weights=np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            mk.ReferenceMeasure(kind="discrete", weights=np.array([1.0, 0.0]))

    def test_smoothing_positive(self):
        with pytest.raises(ValueError):
            mk.SmoothingParams(0.0, 1.0)


def test_benchmark_moments_match_closed_forms():
    y = mk.reciprocal_density_moments(3)
    ln2 = np.log(2.0)
    expected = np.array(
        [(1 - ln2) / ln2, (np.log(4) - 1) / np.log(4), (5 - np.log(64)) / np.log(64)]
    )
    np.testing.assert_allclose(y, expected, rtol=1e-14)
