"""Quality-weighted contrastive objective of the toy encoder.

Every family is symmetrised: a pair's loss is the mean of the loss with
view a as anchor and the loss with view b as anchor. The batch total is
``n * sum(w_i * L_i)``.
"""

from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from ..config import SINKHORN_EPSILON, SINKHORN_ITERATIONS, TAU
from ..exceptions import InvalidConfigError, LengthMismatchError
from ..losses import (
    info_nce_batch,
    neg_cosine_batch,
    normalize_rows,
    normalize_rows_backward,
    sinkhorn_knopp,
    swav_kl_batch,
)
from ..quality import reweight_batch_loss
from .encoder import ToyEncoder, forward_pair

FAMILIES = ("info_nce", "neg_cosine", "swav_kl")


class LossConfig(NamedTuple):
    """Loss family and its constants."""

    family: str = "info_nce"
    tau: float = TAU
    swav_temperature: float = 0.1
    sinkhorn_epsilon: float = SINKHORN_EPSILON
    sinkhorn_iterations: int = SINKHORN_ITERATIONS


class PairBatch(NamedTuple):
    """Two views per pair, shape ``(n, H, W, K)``, and the pair weights."""

    views_a: np.ndarray
    views_b: np.ndarray
    weights: np.ndarray


class FrozenTargets(NamedTuple):
    """Targets that receive no gradient.

    ``a`` and ``b`` hold embeddings for ``neg_cosine`` and equipartition
    codes for ``swav_kl``.
    """

    a: np.ndarray
    b: np.ndarray


class BatchResult(NamedTuple):
    """Loss and gradients of one batch.

    Attributes:
        total: ``n * sum(w_i * L_i)``.
        losses: Per-pair symmetrised losses.
        grads: Gradients of ``total`` for every encoder parameter.
        embedding_grads: Gradients of ``total`` with respect to ``z_a``,
            ``z_b`` and, with a predictor, ``p_a`` and ``p_b``.
    """

    total: float
    losses: np.ndarray
    grads: Dict[str, np.ndarray]
    embedding_grads: Dict[str, np.ndarray]


def check_compatible(encoder: ToyEncoder, config: LossConfig) -> None:
    """Check that the encoder has the heads the loss family needs.

    Raises:
        InvalidConfigError
    """
    if config.family not in FAMILIES:
        raise InvalidConfigError(
            f"Unknown loss family '{config.family}'; expected one of {FAMILIES}"
        )
    if config.family == "neg_cosine" and not encoder.has_predictor:
        raise InvalidConfigError("neg_cosine needs an encoder with a predictor head.")
    if config.family == "swav_kl" and encoder.prototypes is None:
        raise InvalidConfigError("swav_kl needs an encoder with prototypes.")


def _codes(
    encoder: ToyEncoder, z: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    unit, norms = normalize_rows(z)
    return unit @ encoder.prototypes, unit, norms


def _equipartition(scores: np.ndarray, config: LossConfig) -> np.ndarray:
    q = sinkhorn_knopp(scores, config.sinkhorn_epsilon, config.sinkhorn_iterations)
    return q * scores.shape[0]


def freeze_targets(
    encoder: ToyEncoder, batch: PairBatch, config: LossConfig
) -> Optional[FrozenTargets]:
    """Compute the stop-gradient targets at the current parameters."""
    if config.family == "info_nce":
        return None
    acts_a, acts_b = forward_pair(encoder, batch.views_a, batch.views_b)
    if config.family == "neg_cosine":
        return FrozenTargets(acts_a.z.copy(), acts_b.z.copy())
    scores_a, _, _ = _codes(encoder, acts_a.z)
    scores_b, _, _ = _codes(encoder, acts_b.z)
    return FrozenTargets(
        _equipartition(scores_a, config), _equipartition(scores_b, config)
    )


def evaluate(
    encoder: ToyEncoder,
    batch: PairBatch,
    config: LossConfig,
    frozen: Optional[FrozenTargets] = None,
) -> BatchResult:
    """Forward and backward pass of a weighted batch.

    Without ``frozen`` the targets are taken from the current forward pass
    and treated as constants.

    Raises:
        InvalidConfigError: If the encoder lacks a head the family needs.
        LengthMismatchError: If there is not one weight per pair.
    """
    check_compatible(encoder, config)
    weights = np.asarray(batch.weights, dtype=np.float64)
    n = len(batch.views_a)
    if weights.shape != (n,):
        raise LengthMismatchError(f"{weights.size} weights given for {n} pairs.")
    if frozen is None:
        frozen = freeze_targets(encoder, batch, config)

    acts_a, acts_b = forward_pair(encoder, batch.views_a, batch.views_b)
    half = 0.5 * n * weights
    grad_z_a = grad_z_b = None
    grad_p_a = grad_p_b = None
    extra: Dict[str, np.ndarray] = {}

    if config.family == "info_nce":
        loss_ab, g_a1, g_b1 = info_nce_batch(acts_a.z, acts_b.z, config.tau, half)
        loss_ba, g_b2, g_a2 = info_nce_batch(acts_b.z, acts_a.z, config.tau, half)
        grad_z_a, grad_z_b = g_a1 + g_a2, g_b1 + g_b2
    elif config.family == "neg_cosine":
        loss_ab, grad_p_a = neg_cosine_batch(acts_a.p, frozen.b, half)
        loss_ba, grad_p_b = neg_cosine_batch(acts_b.p, frozen.a, half)
        grad_z_a, grad_z_b = np.zeros_like(acts_a.z), np.zeros_like(acts_b.z)
    else:
        prototypes = encoder.prototypes
        scores_a, unit_a, norms_a = _codes(encoder, acts_a.z)
        scores_b, unit_b, norms_b = _codes(encoder, acts_b.z)
        temperature = config.swav_temperature
        loss_ab, g_s_a = swav_kl_batch(scores_a, frozen.b, temperature, half)
        loss_ba, g_s_b = swav_kl_batch(scores_b, frozen.a, temperature, half)
        extra["C"] = unit_a.T @ g_s_a + unit_b.T @ g_s_b
        grad_z_a = normalize_rows_backward(unit_a, norms_a, g_s_a @ prototypes.T)
        grad_z_b = normalize_rows_backward(unit_b, norms_b, g_s_b @ prototypes.T)

    losses = 0.5 * (loss_ab + loss_ba)
    grads_a = encoder.backward(acts_a, grad_z_a, grad_p_a)
    grads_b = encoder.backward(acts_b, grad_z_b, grad_p_b)
    grads = {name: grads_a[name] + grads_b[name] for name in encoder.params}
    grads.update(extra)

    embedding_grads = {"z_a": grad_z_a, "z_b": grad_z_b}
    if grad_p_a is not None:
        embedding_grads.update(p_a=grad_p_a, p_b=grad_p_b)
    total = reweight_batch_loss(weights, losses)
    return BatchResult(total, losses, grads, embedding_grads)


def batch_total(
    encoder: ToyEncoder,
    batch: PairBatch,
    config: LossConfig,
    frozen: Optional[FrozenTargets] = None,
) -> float:
    """Return only the weighted batch total."""
    return evaluate(encoder, batch, config, frozen).total


def gradient_check(
    encoder: ToyEncoder,
    batch: PairBatch,
    config: LossConfig,
    epsilon: float = 1e-5,
) -> Dict[str, float]:
    """Compare analytic and central-difference gradients.

    Targets and weights are held fixed. For every parameter the error is
    ``max |g - g_num| / max(max |g|, 1e-8)``: the denominator is the largest
    analytic entry of that parameter rather than each entry's own magnitude.
    The overall figure is ``max(errors.values())``.
    """
    frozen = freeze_targets(encoder, batch, config)
    analytic = evaluate(encoder, batch, config, frozen).grads

    errors = {}
    for name, param in encoder.params.items():
        numeric = np.zeros_like(param)
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + epsilon
            plus = batch_total(encoder, batch, config, frozen)
            param[index] = original - epsilon
            minus = batch_total(encoder, batch, config, frozen)
            param[index] = original
            numeric[index] = (plus - minus) / (2.0 * epsilon)
        scale = max(float(np.max(np.abs(analytic[name]))), 1e-8)
        errors[name] = float(np.max(np.abs(analytic[name] - numeric)) / scale)
    return errors
