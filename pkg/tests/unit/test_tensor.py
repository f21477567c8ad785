import numpy as np
import pytest

from genview.exceptions import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    InvalidValueError,
    ZeroVectorError,
)
from genview.tensor import (
    PcaProjector,
    as_feature_map,
    as_sample_matrix,
    attention_map,
    cosine_similarity,
    fit_pca,
    min_max_normalize,
    orient_salient,
    pooled_tokens,
    power_iteration,
    project_first_component,
    spatial_aggregate,
)


class TestAsFeatureMap(object):
    def test_converts_to_float64(self):
        fmap = as_feature_map(np.ones((2, 3, 4), dtype=np.float32))

        assert fmap.dtype == np.float64
        assert fmap.shape == (2, 3, 4)

    @pytest.mark.parametrize("shape", [(2, 3), (2, 3, 4, 5), (0, 3, 4), (2, 3, 0)])
    def test_error_occurs_if_shape_is_invalid(self, shape):
        with pytest.raises(DimensionMismatchError):
            as_feature_map(np.zeros(shape))

    def test_error_occurs_if_not_finite(self):
        fmap = np.zeros((2, 2, 2))
        fmap[0, 0, 0] = np.nan

        with pytest.raises(InvalidValueError):
            as_feature_map(fmap)


class TestAsSampleMatrix(object):
    def test_stacks_vectors(self):
        x = as_sample_matrix([[1, 2], [3, 4], [5, 6]])

        assert x.shape == (3, 2)

    def test_error_occurs_if_ragged(self):
        with pytest.raises(DimensionMismatchError):
            as_sample_matrix([[1, 2], [3]])


class TestFitPca(object):
    def test_matches_dense_eigendecomposition(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            k = int(rng.integers(2, 9))
            n = int(rng.integers(k + 2, 60))
            mixing = rng.standard_normal((k, k))
            x = rng.standard_normal((n, k)) @ mixing

            projector = fit_pca(x)
            covariance = np.cov(x, rowvar=False)
            _, vectors = np.linalg.eigh(covariance)

            assert abs(projector.first_component @ vectors[:, -1]) >= 0.999
            assert projector.fitted_on == n

    def test_uses_power_iteration_for_wide_tokens(self):
        rng = np.random.default_rng(1)
        direction = rng.standard_normal(80)
        direction /= np.linalg.norm(direction)
        x = 10.0 * rng.standard_normal((200, 1)) * direction
        x += 0.1 * rng.standard_normal((200, 80))

        projector = fit_pca(x)

        assert abs(projector.first_component @ direction) >= 0.999

    def test_orientation_is_canonical(self):
        x = np.array([[-1.0, 0.1], [1.0, -0.1], [-2.0, 0.2], [2.0, -0.2]])

        component = fit_pca(x).first_component

        assert component[np.argmax(np.abs(component))] > 0
        np.testing.assert_allclose(np.linalg.norm(component), 1.0)

    def test_error_occurs_if_samples_are_identical(self):
        with pytest.raises(DegenerateCovarianceError):
            fit_pca(np.ones((5, 3)))

    def test_error_occurs_if_single_sample(self):
        with pytest.raises(DimensionMismatchError):
            fit_pca(np.ones((1, 3)))


class TestOrientSalient(object):
    def blob_tokens(self):
        background = [[0.0, 0.3, 0.0], [0.0, -0.3, 0.0]] * 7
        return np.array([[-4.0, 0.0, 0.0]] * 2 + background)

    def test_flips_toward_the_minority_tail(self):
        tokens = self.blob_tokens()
        projector = fit_pca(tokens)
        assert projector.first_component[0] > 0

        oriented = orient_salient(projector, tokens)

        np.testing.assert_allclose(
            oriented.first_component, [-1.0, 0.0, 0.0], atol=1e-12
        )
        np.testing.assert_array_equal(oriented.mean, projector.mean)

    def test_keeps_a_salient_orientation(self):
        tokens = -self.blob_tokens()
        projector = fit_pca(tokens)

        assert orient_salient(projector, tokens) is projector


def test_power_iteration_finds_dominant_eigenpair():
    matrix = np.diag([1.0, 5.0, 2.0])

    value, vector = power_iteration(matrix)

    assert value == pytest.approx(5.0)
    assert abs(vector[1]) == pytest.approx(1.0)


def test_pooled_tokens_stacks_all_maps():
    tokens = pooled_tokens([np.zeros((2, 2, 3)), np.ones((1, 3, 3))])

    assert tokens.shape == (7, 3)


def test_pooled_tokens_rejects_mixed_channels():
    with pytest.raises(DimensionMismatchError):
        pooled_tokens([np.zeros((2, 2, 3)), np.zeros((2, 2, 4))])


class TestAttentionMap(object):
    def test_projection(self):
        projector = PcaProjector(np.zeros(2), np.array([1.0, 0.0]), 2)
        fmap = np.array([[[1.0, 5.0], [3.0, -1.0]]])

        np.testing.assert_allclose(
            project_first_component(projector, fmap), [[1.0, 3.0]]
        )
        np.testing.assert_allclose(attention_map(projector, fmap), [[0.0, 1.0]])

    def test_error_occurs_if_channels_differ(self):
        projector = PcaProjector(np.zeros(2), np.array([1.0, 0.0]), 2)

        with pytest.raises(DimensionMismatchError):
            project_first_component(projector, np.zeros((2, 2, 3)))


class TestMinMaxNormalize(object):
    def test_range(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            out = min_max_normalize(rng.standard_normal((4, 5)))

            assert out.min() == 0.0
            assert out.max() == 1.0

    def test_flat_map_becomes_half(self):
        np.testing.assert_array_equal(min_max_normalize(np.full((2, 2), 3.0)), 0.5)

    def test_error_occurs_if_not_finite(self):
        with pytest.raises(InvalidValueError):
            min_max_normalize(np.array([[np.inf, 0.0]]))


class TestCosineSimilarity(object):
    @pytest.mark.parametrize(
        "a, b, expected",
        [
            ([1, 0], [2, 0], 1.0),
            ([1, 0], [0, 3], 0.0),
            ([1, 1], [-1, -1], -1.0),
        ],
    )
    def test_values(self, a, b, expected):
        assert cosine_similarity(np.array(a), np.array(b)) == pytest.approx(expected)

    def test_error_occurs_if_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine_similarity(np.zeros(3), np.ones(3))

    def test_error_occurs_if_sizes_differ(self):
        with pytest.raises(DimensionMismatchError):
            cosine_similarity(np.ones(3), np.ones(2))


class TestSpatialAggregate(object):
    def test_weighted_sum(self):
        fmap = np.arange(12, dtype=float).reshape(2, 2, 3)
        weights = np.array([[1.0, 0.0], [0.0, 0.5]])

        np.testing.assert_allclose(
            spatial_aggregate(weights, fmap), fmap[0, 0] + 0.5 * fmap[1, 1]
        )

    def test_error_occurs_if_sizes_differ(self):
        with pytest.raises(DimensionMismatchError):
            spatial_aggregate(np.ones((3, 2)), np.ones((2, 2, 3)))
