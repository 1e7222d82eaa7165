"""Tests for samplers.py: simplex, cube facets, tilted signs and the projected-body samplers.

Monte-Carlo checks use fixed seeds and a 4 standard-error acceptance band.
"""

import math

import numpy as np
import pytest
from scipy import stats

from polyvar.errors import (
    DimensionTooLargeError,
    DimensionTooSmallError,
    IndexOutOfRangeError,
    InsufficientDataError,
    PolyvarError,
)
from polyvar.exactmoments import cube_proj_second_moment
from polyvar.geomcore import (
    axis_direction,
    hyperplane_frame,
    make_stream,
    normalize_direction,
    random_direction,
    svd_decompose,
)
from polyvar.metrics import MomentAccumulator, finalize
from polyvar.oracle import hull_contains, oracle_moments
from polyvar.samplers import (
    SignVector,
    WeightedBatch,
    cube_mixture_weights,
    make_body_sampler,
    sample_cross_projection,
    sample_cube_facet,
    sample_cube_projection,
    sample_sign_tilted,
    sample_simplex,
    sign_sums,
    signs_from_index,
    weighted_cross_batch,
    with_linear_map,
)

MILLION = 1_000_000


def assert_mean_close(values: np.ndarray, target: float, k: float = 4.0) -> None:
    """Sample mean within ``k`` standard errors of ``target``."""
    se = values.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.mean() - target) <= k * se, (values.mean(), target, se)


def weighted_mean_and_se(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Self-normalized mean with its delta-method standard error."""
    total = weights.sum()
    mean = float(weights @ values / total)
    se = math.sqrt(float(np.sum((weights * (values - mean)) ** 2))) / total
    return mean, se


def index_of(signs: np.ndarray) -> np.ndarray:
    """Enumeration index of sign rows (bit j set when eps_j = -1)."""
    bits = (1 - signs.astype(np.int64)) // 2
    return bits @ (1 << np.arange(signs.shape[1]))


class TestSimplex:
    """Normalized exponential spacings are uniform on the simplex."""

    def test_sums_to_one_and_nonnegative(self):
        y = sample_simplex(7, make_stream(1), size=10_000)
        assert y.shape == (10_000, 7)
        assert np.all(y >= 0.0)
        assert np.max(np.abs(y.sum(axis=1) - 1.0)) <= 1e-12

    def test_single_draw(self):
        y = sample_simplex(4, make_stream(2))
        assert y.shape == (4,)
        assert y.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_dimension_one(self):
        with pytest.raises(DimensionTooSmallError):
            sample_simplex(1, make_stream(0))

    @pytest.mark.slow
    def test_moments(self):
        y2 = sample_simplex(2, make_stream(3), size=MILLION)
        assert_mean_close(y2[:, 0], 0.5)
        y3 = sample_simplex(3, make_stream(4), size=MILLION)
        assert_mean_close(y3[:, 0] ** 2, 1.0 / 6.0)
        assert_mean_close(y3[:, 0] * y3[:, 1], 1.0 / 12.0)


class TestCubeFacet:
    """Facet points pin one coordinate and leave the rest uniform."""

    def test_fixed_coordinate(self):
        points = sample_cube_facet(4, 2, -1, make_stream(5), size=1000)
        assert np.all(points[:, 1] == -1.0)
        assert np.all(np.abs(points) <= 1.0)

    @pytest.mark.parametrize("axis", [0, 4])
    def test_axis_out_of_range(self, axis):
        with pytest.raises(IndexOutOfRangeError):
            sample_cube_facet(3, axis, 1, make_stream(0))

    def test_rejects_dimension_one(self):
        with pytest.raises(DimensionTooSmallError):
            sample_cube_facet(1, 1, 1, make_stream(0))

    def test_rejects_bad_sign(self):
        with pytest.raises(PolyvarError):
            sample_cube_facet(3, 1, 0, make_stream(0))

    @pytest.mark.slow
    def test_free_coordinate_moments(self):
        points = sample_cube_facet(3, 3, 1, make_stream(6), size=MILLION)
        assert_mean_close(points[:, 0] ** 4, 0.2)
        assert_mean_close(points[:, 0] ** 2 * points[:, 1] ** 2, 1.0 / 9.0)


class TestCubeProjection:
    """Facet mixture with weights |theta_i| / ||theta||_1."""

    def test_mixture_weights_sum_to_one(self):
        weights = cube_mixture_weights(random_direction(12, make_stream(7)))
        assert weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all(weights >= 0.0)

    def test_lifted_samples_are_orthogonal_to_theta(self):
        theta = random_direction(6, make_stream(8))
        frame = hyperplane_frame(theta)
        points = sample_cube_projection(theta, frame, make_stream(8, 1), size=5000)
        assert points.shape == (5000, 5)
        assert np.max(np.abs(frame.lift(points) @ theta.coords)) <= 1e-10

    def test_single_draw_shape(self):
        theta = random_direction(4, make_stream(9))
        point = sample_cube_projection(theta, hyperplane_frame(theta), make_stream(9, 1))
        assert point.shape == (3,)

    @pytest.mark.slow
    def test_axis_direction_is_the_square(self):
        theta = axis_direction(3, 3)
        points = sample_cube_projection(theta, hyperplane_frame(theta), make_stream(10), MILLION)
        assert_mean_close(points[:, 0] ** 2, 1.0 / 3.0)

    @pytest.mark.slow
    def test_hexagon_second_moment(self):
        theta = normalize_direction([1.0, 1.0, 1.0])
        frame = hyperplane_frame(theta)
        eta = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        points = sample_cube_projection(theta, frame, make_stream(11), MILLION)
        values = (frame.lift(points) @ eta) ** 2
        assert_mean_close(values, 5.0 / 9.0)
        assert cube_proj_second_moment(theta, eta) == pytest.approx(5.0 / 9.0, abs=1e-12)


class TestTiltedSigns:
    """Exact sampling from P(eps) proportional to |<eps, theta>|."""

    def test_enumeration_order(self):
        theta = random_direction(6, make_stream(12))
        signs = signs_from_index(np.arange(64), 6)
        assert np.allclose(signs @ theta.coords, sign_sums(theta), atol=1e-14)
        assert np.array_equal(signs[0], np.ones(6))
        assert np.array_equal(signs[1], [-1, 1, 1, 1, 1, 1])

    def test_diagonal_direction_has_two_atoms(self):
        theta = normalize_direction([1.0, 1.0])
        signs = sample_sign_tilted(theta, make_stream(13), size=20_000)
        assert set(map(tuple, signs.tolist())) == {(1, 1), (-1, -1)}
        assert np.mean(signs[:, 0] == 1) == pytest.approx(0.5, abs=0.02)

    def test_axis_direction_is_uniform(self):
        theta = normalize_direction([1.0, 0.0])
        signs = sample_sign_tilted(theta, make_stream(14), size=40_000)
        counts = np.bincount(index_of(signs), minlength=4)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_single_draw_is_sign_vector(self):
        draw = sample_sign_tilted(random_direction(5, make_stream(15)), make_stream(15, 1))
        assert isinstance(draw, SignVector)
        assert draw.n == 5
        assert set(np.abs(draw.signs).tolist()) == {1}

    def test_dimension_too_large(self):
        with pytest.raises(DimensionTooLargeError):
            sample_sign_tilted(random_direction(21, make_stream(16)), make_stream(16))

    @pytest.mark.slow
    def test_goodness_of_fit_against_enumeration(self):
        theta = random_direction(10, make_stream(17))
        masses = np.abs(sign_sums(theta))
        expected = MILLION * masses / masses.sum()
        signs = sample_sign_tilted(theta, make_stream(17, 1), size=MILLION)
        observed = np.bincount(index_of(signs), minlength=1024)
        assert stats.chisquare(observed, expected).pvalue > 1e-3


class TestCrossProjection:
    """Exact and weighted samplers of P_H B_1^n."""

    def test_segment_in_two_dimensions(self):
        theta = normalize_direction([1.0, 1.0])
        points = sample_cross_projection(theta, hyperplane_frame(theta), make_stream(18), 10_000)
        assert points.shape == (10_000, 1)
        assert np.max(np.abs(points)) <= 1.0 / math.sqrt(2.0) + 1e-12

    def test_lifted_samples_lie_in_theta_perp_and_unit_ball(self):
        theta = random_direction(8, make_stream(19))
        frame = hyperplane_frame(theta)
        points = sample_cross_projection(theta, frame, make_stream(19, 1), size=5000)
        assert np.max(np.abs(frame.lift(points) @ theta.coords)) <= 1e-10
        assert np.all(np.linalg.norm(frame.lift(points), axis=1) <= 1.0 + 1e-12)

    def test_dimension_too_large(self):
        theta = random_direction(21, make_stream(20))
        with pytest.raises(DimensionTooLargeError):
            sample_cross_projection(theta, hyperplane_frame(theta), make_stream(20))

    @pytest.mark.slow
    def test_radial_second_moment_matches_oracle(self):
        theta = random_direction(3, make_stream(21))
        frame = hyperplane_frame(theta)
        points = sample_cross_projection(theta, frame, make_stream(21, 1), MILLION)
        assert_mean_close(np.sum(points**2, axis=1), oracle_moments("cross", theta, frame).e_x2)


class TestWeightedBatch:
    """Uniform sign proposal with weights |<eps, theta>|."""

    def test_constant_function_is_exact(self):
        theta = random_direction(30, make_stream(22))
        batch = weighted_cross_batch(theta, hyperplane_frame(theta), 500, make_stream(22, 1))
        assert batch.ratio_estimate(lambda x: np.full(len(x), 2.5)) == pytest.approx(2.5, rel=1e-14)
        assert 0.0 < batch.effective_size <= 500.0

    def test_weights_are_sign_sums(self):
        theta = normalize_direction([1.0, 1.0])
        batch = weighted_cross_batch(theta, hyperplane_frame(theta), 1000, make_stream(23))
        assert set(np.round(batch.weights, 12).tolist()) <= {0.0, round(math.sqrt(2.0), 12)}

    def test_all_zero_weights_raise(self):
        theta = normalize_direction([1.0, 1.0])
        batch = weighted_cross_batch(theta, hyperplane_frame(theta), 1000, make_stream(23))
        zero = batch.weights == 0.0
        assert zero.any()
        empty = WeightedBatch(points=batch.points[zero], weights=batch.weights[zero])
        with pytest.raises(InsufficientDataError):
            empty.ratio_estimate(lambda x: np.ones(len(x)))
        with pytest.raises(InsufficientDataError):
            _ = empty.effective_size

    def test_validation(self):
        with pytest.raises(PolyvarError):
            WeightedBatch(points=np.zeros((3, 2)), weights=np.ones(2))
        with pytest.raises(PolyvarError):
            WeightedBatch(points=np.zeros((2, 2)), weights=np.array([1.0, -1.0]))
        theta = random_direction(3, make_stream(24))
        with pytest.raises(PolyvarError):
            weighted_cross_batch(theta, hyperplane_frame(theta), 0, make_stream(24))

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_agrees_with_exact_sampler(self, n):
        theta = random_direction(n, make_stream(25, n))
        frame = hyperplane_frame(theta)
        m = 200_000
        exact = np.sum(sample_cross_projection(theta, frame, make_stream(26, n), m) ** 2, axis=1)
        batch = weighted_cross_batch(theta, frame, m, make_stream(27, n))
        weighted, weighted_se = weighted_mean_and_se(np.sum(batch.points**2, axis=1), batch.weights)
        exact_se = exact.std(ddof=1) / math.sqrt(m)
        assert abs(weighted - exact.mean()) <= 4.0 * math.hypot(exact_se, weighted_se)

    @pytest.mark.slow
    def test_fourth_radial_moment_matches_oracle(self):
        theta = random_direction(3, make_stream(28))
        frame = hyperplane_frame(theta)
        batch = weighted_cross_batch(theta, frame, MILLION, make_stream(28, 1))
        estimate, se = weighted_mean_and_se(np.sum(batch.points**2, axis=1) ** 2, batch.weights)
        assert abs(estimate - oracle_moments("cross", theta, frame).e_x4) <= 4.0 * se

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [3, 4])
    def test_radial_variance_matches_oracle(self, n):
        theta = random_direction(n, make_stream(40, n))
        frame = hyperplane_frame(theta)
        batch = weighted_cross_batch(theta, frame, MILLION, make_stream(41, n))
        acc = MomentAccumulator(n - 1, batches=100).accumulate_split(batch.points, batch.weights)
        report = finalize(acc, body="cross-proj", n=n)
        exact = oracle_moments("cross", theta, frame).var_x2
        assert abs(report.var_x2 - exact) <= 4.0 * report.var_se


class TestHullMembership:
    """Every projected-body sample lies in the oracle hull."""

    @pytest.mark.parametrize("body", ["cube-proj", "cross-proj"])
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_samples_inside_hull(self, body, n):
        theta = random_direction(n, make_stream(29, n))
        sampler = make_body_sampler(body, n, theta)
        hull = oracle_moments(body, theta, sampler.frame).hull
        points, weights = sampler.draw(make_stream(30, n), 10_000)
        assert weights is None
        slack = points @ hull.normals.T - hull.offsets
        assert np.max(slack) <= 1e-9
        assert all(hull_contains(hull, p) for p in points[:100])


class TestBodySampler:
    """Named bodies used by the engine and the CLI."""

    def test_cube_is_isotropic(self):
        sampler = make_body_sampler("cube", 5)
        points, weights = sampler.draw(make_stream(31), 200_000)
        assert weights is None
        assert sampler.dim == 5
        assert np.max(np.abs(np.cov(points.T) - np.eye(5))) <= 0.02

    def test_simplex_is_centered_in_frame(self):
        sampler = make_body_sampler("simplex", 4)
        points, _ = sampler.draw(make_stream(32), 100_000)
        assert points.shape == (100_000, 3)
        assert np.max(np.abs(points.mean(axis=0))) <= 0.01
        assert np.mean(np.sum(points**2, axis=1)) == pytest.approx(2.0 / 5.0 - 1.0 / 4.0, rel=0.02)

    def test_projected_body_needs_theta(self):
        with pytest.raises(PolyvarError):
            make_body_sampler("cube-proj", 4)

    def test_theta_dimension_must_match(self):
        with pytest.raises(PolyvarError):
            make_body_sampler("cross-proj", 4, random_direction(5, make_stream(33)))

    def test_unknown_body(self):
        with pytest.raises(PolyvarError):
            make_body_sampler("sphere", 4, random_direction(4, make_stream(34)))

    def test_large_cross_projection_switches_to_weights(self, caplog):
        theta = random_direction(24, make_stream(35))
        with caplog.at_level("WARNING"):
            sampler = make_body_sampler("cross-proj", 24, theta)
        assert sampler.weighted
        assert "weighted" in caplog.text
        points, weights = sampler.draw(make_stream(36), 100)
        assert points.shape == (100, 23)
        assert weights.shape == (100,)


class TestLinearImage:
    """``with_linear_map`` draws TX from the same stream as X."""

    def test_points_are_mapped(self):
        theta = random_direction(4, make_stream(37))
        base = make_body_sampler("cube-proj", 4, theta)
        mapped = with_linear_map(base, svd_decompose(np.diag([1.0, 2.0, 3.0])))
        points, weights = mapped.draw(make_stream(38), 1000)
        expected, _ = base.draw(make_stream(38), 1000)
        assert weights is None
        assert mapped.dim == 3
        np.testing.assert_allclose(points, expected * [1.0, 2.0, 3.0], rtol=1e-15, atol=0.0)

    def test_weights_pass_through(self):
        theta = random_direction(24, make_stream(39))
        base = make_body_sampler("cross-proj", 24, theta)
        mapped = with_linear_map(base, svd_decompose(2.0 * np.eye(23)))
        points, weights = mapped.draw(make_stream(40), 200)
        expected, expected_weights = base.draw(make_stream(40), 200)
        assert mapped.weighted
        np.testing.assert_array_equal(weights, expected_weights)
        np.testing.assert_allclose(points, 2.0 * expected, rtol=1e-15, atol=0.0)

    def test_map_must_act_on_the_sampled_space(self):
        base = make_body_sampler("cube-proj", 4, random_direction(4, make_stream(41)))
        with pytest.raises(PolyvarError):
            with_linear_map(base, svd_decompose(np.eye(4)))
