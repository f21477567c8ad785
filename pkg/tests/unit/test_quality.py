import math

import numpy as np
import pytest

from genview.exceptions import (
    DimensionMismatchError,
    InvalidValueError,
    LengthMismatchError,
)
from genview.quality import (
    PairQuality,
    batch_weights,
    fit_batch_projector,
    foreground_background_maps,
    pair_quality,
    reweight_batch_loss,
    score_pairs,
)
from genview.tensor import PcaProjector, attention_map

AXIS_PROJECTOR = PcaProjector(np.zeros(3), np.array([1.0, 0.0, 0.0]), 2)


def two_token_map(foreground, background):
    return np.array([[foreground], [background]], dtype=float)


class TestForegroundBackgroundMaps(object):
    def test_complement_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            fmap = rng.standard_normal((4, 5, 3))

            fg, bg = foreground_background_maps(fmap, AXIS_PROJECTOR)

            np.testing.assert_allclose(fg + bg, 1.0, atol=1e-12)

    def test_constant_map(self):
        fg, bg = foreground_background_maps(np.ones((2, 2, 3)), AXIS_PROJECTOR)

        np.testing.assert_array_equal(fg, 0.5)
        np.testing.assert_array_equal(bg, 0.5)

    def test_two_tokens(self):
        fmap = two_token_map([5.0, 0.0, 0.0], [2.0, 0.0, 0.0])

        fg, bg = foreground_background_maps(fmap, AXIS_PROJECTOR)

        np.testing.assert_allclose(fg.ravel(), [1.0, 0.0])
        np.testing.assert_allclose(bg.ravel(), [0.0, 1.0])


class TestPairQuality(object):
    def test_identical_views(self):
        fmap = np.random.default_rng(1).standard_normal((3, 3, 3))

        quality = pair_quality(fmap, fmap, AXIS_PROJECTOR)

        assert quality.s_f == pytest.approx(1.0, abs=1e-9)
        assert quality.s_b == pytest.approx(1.0, abs=1e-9)
        assert quality.q == pytest.approx(0.0, abs=1e-9)

    def test_same_foreground_orthogonal_background(self):
        map_a = two_token_map([1, 0, 0], [0, 1, 0])
        map_b = two_token_map([1, 0, 0], [0, 0, 1])

        quality = pair_quality(map_a, map_b, AXIS_PROJECTOR)

        assert quality.s_f == pytest.approx(1.0, abs=1e-9)
        assert quality.s_b == pytest.approx(0.0, abs=1e-9)
        assert quality.q == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_foreground_same_background(self):
        map_a = two_token_map([1, 1, 0], [0, 0, 1])
        map_b = two_token_map([1, -1, 0], [0, 0, 1])

        quality = pair_quality(map_a, map_b, AXIS_PROJECTOR)

        assert quality.q == pytest.approx(-1.0, abs=1e-9)

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(2)
        map_a = rng.standard_normal((3, 4, 3))
        map_b = rng.standard_normal((3, 4, 3))

        q = pair_quality(map_a, map_b, AXIS_PROJECTOR).q

        assert pair_quality(map_b, map_a, AXIS_PROJECTOR).q == pytest.approx(q)
        scaled = pair_quality(3.0 * map_a, 3.0 * map_b, AXIS_PROJECTOR).q
        assert scaled == pytest.approx(q)
        assert -2.0 <= q <= 2.0

    def test_error_occurs_if_shapes_differ(self):
        with pytest.raises(DimensionMismatchError):
            pair_quality(np.ones((2, 2, 3)), np.ones((2, 3, 3)), AXIS_PROJECTOR)


class TestScorePairs(object):
    def test_fits_a_batch_projector(self):
        rng = np.random.default_rng(3)
        maps_a = [rng.standard_normal((3, 3, 4)) for _ in range(4)]

        pairs = score_pairs(maps_a, maps_a)

        assert len(pairs) == 4
        assert all(p.q == pytest.approx(0.0, abs=1e-9) for p in pairs)

    def test_vanishing_region_gets_minimum_quality(self):
        maps = [np.zeros((2, 2, 3)), np.zeros((2, 2, 3))]

        pairs = score_pairs(maps, maps)

        assert pairs == [PairQuality.minimum(), PairQuality.minimum()]
        assert pairs[0].q == -2.0
        assert pairs[0].flagged

    def test_uses_the_given_projector(self, mocker):
        spy = mocker.spy(np.linalg, "eigh")
        maps = [two_token_map([1, 0, 0], [0, 1, 0])]

        pairs = score_pairs(maps, maps, AXIS_PROJECTOR)

        assert spy.call_count == 0
        assert pairs[0].q == pytest.approx(0.0, abs=1e-9)

    def test_error_occurs_if_lengths_differ(self):
        with pytest.raises(LengthMismatchError):
            score_pairs([np.ones((2, 2, 3))], [])


def test_fit_batch_projector_handles_identical_tokens():
    projector = fit_batch_projector([np.ones((2, 2, 3))])

    np.testing.assert_array_equal(projector.first_component, [1.0, 0.0, 0.0])


def test_fit_batch_projector_marks_the_salient_blob():
    maps = []
    for row, col in [(0, 0), (3, 2)]:
        fmap = np.zeros((4, 4, 3))
        fmap[..., 1] = np.where(np.arange(16).reshape(4, 4) % 2, 0.3, -0.3)
        fmap[row, col : col + 2] = [-4.0, 0.0, 0.0]
        maps.append(fmap)

    projector = fit_batch_projector(maps)

    assert projector.first_component[0] < 0
    for fmap in maps:
        attention = attention_map(projector, fmap)
        assert np.count_nonzero(attention == 1.0) == 2
        assert attention[fmap[..., 0] < 0].min() == 1.0


class TestBatchWeights(object):
    @pytest.mark.parametrize(
        "qualities, expected",
        [
            ([0.3, 0.3, 0.3, 0.3], [0.25, 0.25, 0.25, 0.25]),
            ([math.log(2.0), 0.0], [2 / 3, 1 / 3]),
            ([0.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]),
        ],
    )
    def test_values(self, qualities, expected):
        np.testing.assert_allclose(batch_weights(qualities), expected, atol=1e-12)

    def test_softmax_contract(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n = int(rng.integers(1, 16))
            q = rng.uniform(-2.0, 2.0, n)

            w = batch_weights(q)

            assert abs(w.sum() - 1.0) <= 1e-9
            assert np.all((w > 0) & (w <= 1))
            perm = rng.permutation(n)
            np.testing.assert_allclose(batch_weights(q[perm]), w[perm], atol=1e-14)
            np.testing.assert_allclose(batch_weights(q + 5.0), w, atol=1e-12)
            order = np.argsort(q)
            assert np.all(np.diff(w[order]) > 0) or n == 1

    @pytest.mark.parametrize("qualities", [[], [0.0, np.nan], [np.inf]])
    def test_error_occurs_if_invalid(self, qualities):
        with pytest.raises(InvalidValueError):
            batch_weights(qualities)


class TestReweightBatchLoss(object):
    @pytest.mark.parametrize(
        "weights, losses, expected",
        [
            ([1 / 3, 1 / 3, 1 / 3], [1.0, 2.0, 3.0], 6.0),
            ([1.0, 0.0, 0.0], [2.0, 5.0, 5.0], 6.0),
            ([2 / 3, 1 / 3], [0.3, 0.9], 1.0),
        ],
    )
    def test_values(self, weights, losses, expected):
        assert reweight_batch_loss(weights, losses) == pytest.approx(expected)

    def test_error_occurs_if_lengths_differ(self):
        with pytest.raises(LengthMismatchError):
            reweight_batch_loss([0.5, 0.5], [1.0])
