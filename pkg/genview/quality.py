"""Pair quality scoring and quality-driven loss reweighting."""

import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    InvalidValueError,
    LengthMismatchError,
    ZeroVectorError,
)
from .tensor import (
    PcaProjector,
    attention_map,
    cosine_similarity,
    fit_pca,
    orient_salient,
    pooled_tokens,
    spatial_aggregate,
)

logger = logging.getLogger(__name__)


class PairQuality(NamedTuple):
    """Foreground and background similarity of a positive pair.

    Attributes:
        s_f: Cosine similarity of the two foreground descriptors.
        s_b: Cosine similarity of the two background descriptors.
        q: Quality score ``s_f - s_b``.
        flagged: True when a region descriptor vanished and the pair was
            given the minimum score.
    """

    s_f: float
    s_b: float
    q: float
    flagged: bool = False

    @classmethod
    def minimum(cls) -> "PairQuality":
        """Return the score given to unusable pairs."""
        return cls(s_f=-1.0, s_b=1.0, q=-2.0, flagged=True)


def foreground_background_maps(
    fmap: np.ndarray, projector: PcaProjector
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the foreground attention map and its complement."""
    foreground = attention_map(projector, fmap)
    return foreground, 1.0 - foreground


def region_descriptors(
    fmap: np.ndarray, projector: PcaProjector
) -> Tuple[np.ndarray, np.ndarray]:
    """Aggregate a feature map into foreground and background vectors."""
    foreground, background = foreground_background_maps(fmap, projector)
    return spatial_aggregate(foreground, fmap), spatial_aggregate(background, fmap)


def pair_quality(
    map_a: np.ndarray, map_b: np.ndarray, projector: PcaProjector
) -> PairQuality:
    """Score a pair of views by foreground agreement and background contrast.

    Raises:
        DimensionMismatchError: If the two maps differ in shape.
        ZeroVectorError: If a region descriptor has vanishing norm.
    """
    if np.shape(map_a) != np.shape(map_b):
        raise DimensionMismatchError(
            f"Views differ in shape: {np.shape(map_a)} != {np.shape(map_b)}"
        )
    fg_a, bg_a = region_descriptors(map_a, projector)
    fg_b, bg_b = region_descriptors(map_b, projector)

    s_f = cosine_similarity(fg_a, fg_b)
    s_b = cosine_similarity(bg_a, bg_b)
    return PairQuality(s_f=s_f, s_b=s_b, q=s_f - s_b)


def fit_batch_projector(maps: Sequence[np.ndarray]) -> PcaProjector:
    """Fit a projector on the pooled tokens of every view in a batch.

    The component is pointed at the salient tail of the batch tokens, so the
    foreground map marks the salient region whatever sign the fit returned.
    When all tokens are identical any direction projects them to a constant,
    so the first axis is used.
    """
    tokens = pooled_tokens(maps)
    try:
        return orient_salient(fit_pca(tokens), tokens)
    except DegenerateCovarianceError:
        logger.debug("batch tokens have no spread; using a constant projection")
        axis = np.zeros(tokens.shape[1])
        axis[0] = 1.0
        return PcaProjector(tokens.mean(axis=0), axis, tokens.shape[0])


def score_pairs(
    maps_a: Sequence[np.ndarray],
    maps_b: Sequence[np.ndarray],
    projector: Optional[PcaProjector] = None,
) -> List[PairQuality]:
    """Score every pair of a batch.

    Without a projector one is fitted on the batch itself. Pairs with a
    vanishing region descriptor receive ``PairQuality.minimum()``.

    Raises:
        LengthMismatchError: If the two view lists differ in length.
    """
    if len(maps_a) != len(maps_b):
        raise LengthMismatchError(
            f"Batch sizes differ: {len(maps_a)} != {len(maps_b)}"
        )
    if projector is None:
        projector = fit_batch_projector(list(maps_a) + list(maps_b))

    qualities = []
    for index, (map_a, map_b) in enumerate(zip(maps_a, maps_b)):
        try:
            qualities.append(pair_quality(map_a, map_b, projector))
        except ZeroVectorError:
            logger.debug("pair %d has a vanishing region; minimum quality", index)
            qualities.append(PairQuality.minimum())
    return qualities


def batch_weights(qualities: Sequence[float]) -> np.ndarray:
    """Softmax of the quality scores of a batch.

    Raises:
        InvalidValueError: If the batch is empty or holds non-finite scores.
    """
    q = np.asarray(qualities, dtype=np.float64)
    if q.size == 0:
        raise InvalidValueError("A batch needs at least one quality score.")
    if not np.all(np.isfinite(q)):
        raise InvalidValueError("Quality scores must be finite.")

    e = np.exp(q - q.max())
    return e / e.sum()


def reweight_batch_loss(weights: Sequence[float], losses: Sequence[float]) -> float:
    """Return ``n * sum(w_i * L_i)``.

    Uniform weights give back the plain sum of the losses.

    Raises:
        LengthMismatchError: If the sequences differ in length.
    """
    w = np.asarray(weights, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    if w.shape != losses.shape:
        raise LengthMismatchError(
            f"{w.size} weights given for {losses.size} losses."
        )
    return float(w.size * np.dot(w, losses))
