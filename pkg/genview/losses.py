"""Contrastive objectives with analytic gradients.

Single-pair functions follow the textbook definitions. The ``*_batch``
functions return one loss per pair together with the gradients of
``sum(coef_i * L_i)`` so a trainer can apply per-pair weights.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from .config import SINKHORN_EPSILON, SINKHORN_ITERATIONS, TAU, ZERO_NORM
from .exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    InvalidTemperatureError,
    InvalidValueError,
    NonFiniteError,
    OutOfRangeError,
    ZeroVectorError,
)


def normalize_rows(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row-normalize x and return the normalized rows with their norms."""
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms <= ZERO_NORM):
        raise ZeroVectorError("Cannot normalize a zero vector.")
    return x / norms, norms


def normalize_rows_backward(
    unit: np.ndarray, norms: np.ndarray, grad: np.ndarray
) -> np.ndarray:
    """Pull a gradient on ``x / ||x||`` back to ``x``."""
    radial = np.sum(unit * grad, axis=-1, keepdims=True)
    return (grad - unit * radial) / norms


def _check_tau(tau: float) -> None:
    if not tau > 0.0:
        raise InvalidTemperatureError(f"Temperature must be positive: {tau}")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def info_nce(
    z1: np.ndarray,
    z2: np.ndarray,
    negatives: Sequence[np.ndarray] = (),
    tau: float = TAU,
    normalize: bool = True,
) -> float:
    """Noise contrastive estimation loss of one anchor.

    The positive logit appears in the denominator next to the negatives, so
    an anchor without negatives has zero loss.

    Raises:
        InvalidTemperatureError: If tau is not positive.
        DimensionMismatchError: If the vectors differ in dimension.
    """
    loss, _ = info_nce_grad(z1, z2, negatives, tau=tau, normalize=normalize)
    return loss


def info_nce_grad(
    z1: np.ndarray,
    z2: np.ndarray,
    negatives: Sequence[np.ndarray] = (),
    tau: float = TAU,
    normalize: bool = True,
) -> Tuple[float, Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Return the InfoNCE loss and its gradients for z1, z2 and the negatives."""
    _check_tau(tau)
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    negs = np.asarray(negatives, dtype=np.float64)
    if negs.size == 0:
        negs = np.zeros((0, z1.shape[-1]))
    if z1.ndim != 1 or z2.shape != z1.shape or negs.ndim != 2:
        raise DimensionMismatchError("Embeddings must be vectors of one dimension.")
    if negs.shape[1] != z1.shape[0]:
        raise DimensionMismatchError("Negatives differ in dimension from the anchor.")

    if normalize:
        u, nu = normalize_rows(z1)
        v, nv = normalize_rows(z2)
        n, nn = normalize_rows(negs) if len(negs) else (negs, np.ones((0, 1)))
    else:
        u, v, n = z1, z2, negs

    logits = np.concatenate([[u @ v], n @ u]) / tau
    log_probs = _log_softmax(logits)
    loss = float(-log_probs[0]) + 0.0

    probs = np.exp(log_probs)
    coef_pos = probs[0] - 1.0
    g_u = (coef_pos * v + probs[1:] @ n) / tau
    g_v = coef_pos * u / tau
    g_n = np.outer(probs[1:], u) / tau

    if normalize:
        g_u = normalize_rows_backward(u, nu, g_u)
        g_v = normalize_rows_backward(v, nv, g_v)
        if len(negs):
            g_n = normalize_rows_backward(n, nn, g_n)
    return loss, (g_u, g_v, g_n)


def neg_cosine(p: np.ndarray, z: np.ndarray) -> float:
    """Negative cosine similarity between a prediction and a target.

    Raises:
        ZeroVectorError: If either vector vanishes.
    """
    loss, _ = neg_cosine_grad(p, z)
    return loss


def neg_cosine_grad(p: np.ndarray, z: np.ndarray) -> Tuple[float, np.ndarray]:
    """Return the negative cosine loss and its gradient with respect to ``p``.

    The target ``z`` is a constant; no gradient is returned for it.
    """
    p = np.asarray(p, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if p.shape != z.shape:
        raise DimensionMismatchError(f"Vector sizes differ: {p.shape} != {z.shape}")
    p_hat, p_norm = normalize_rows(p)
    z_hat, _ = normalize_rows(z)
    loss = float(-p_hat @ z_hat)
    return loss, normalize_rows_backward(p_hat, p_norm, -z_hat)


def sinkhorn_knopp(
    scores: np.ndarray,
    epsilon: float = SINKHORN_EPSILON,
    iterations: int = SINKHORN_ITERATIONS,
) -> np.ndarray:
    """Equipartition assignment of n samples over P prototypes.

    Each round normalizes the columns to 1/P and then the rows to 1/n, so the
    result always ends with a row step and its rows sum to 1/n.

    Raises:
        OutOfRangeError: If epsilon or iterations are not positive.
        NonFiniteError: If the exponentiated scores vanish or overflow.
    """
    if not epsilon > 0.0:
        raise OutOfRangeError(f"epsilon must be positive: {epsilon}")
    if iterations < 1:
        raise OutOfRangeError(f"iterations must be at least 1: {iterations}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or not np.all(np.isfinite(scores)):
        raise InvalidValueError("Scores must be a finite (n, P) matrix.")

    n, prototypes = scores.shape
    q = np.exp((scores - scores.max(axis=1, keepdims=True)) / epsilon)
    q /= q.sum()
    for _ in range(iterations):
        col = q.sum(axis=0, keepdims=True)
        if not np.all(np.isfinite(col)) or np.any(col <= 0.0):
            raise NonFiniteError(
                f"Sinkhorn column mass vanished; epsilon {epsilon} is too small."
            )
        q *= 1.0 / (prototypes * col)
        row = q.sum(axis=1, keepdims=True)
        if not np.all(np.isfinite(row)) or np.any(row <= 0.0):
            raise NonFiniteError(
                f"Sinkhorn row mass vanished; epsilon {epsilon} is too small."
            )
        q *= 1.0 / (n * row)
    return q


def _as_distributions(rows: np.ndarray, name: str) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[np.newaxis, :]
    if rows.ndim != 2 or not np.all(np.isfinite(rows)) or np.any(rows < 0):
        raise InvalidDistributionError(f"{name} must be non-negative finite rows.")
    return rows


def swav_kl_rows(predicted: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-row ``KL(target || predicted)`` with ``0 log 0 = 0``.

    Targets are renormalized to sum to one per row.

    Raises:
        InvalidDistributionError: If predicted rows are not distributions or
            put zero mass where a target does not.
    """
    predicted = _as_distributions(predicted, "Predicted")
    targets = _as_distributions(targets, "Targets")
    if predicted.shape != targets.shape:
        raise DimensionMismatchError(
            f"Shapes differ: {predicted.shape} != {targets.shape}"
        )
    if not np.allclose(predicted.sum(axis=1), 1.0, atol=1e-6):
        raise InvalidDistributionError("Predicted rows must sum to one.")
    mass = targets.sum(axis=1, keepdims=True)
    if np.any(mass <= 0.0):
        raise InvalidDistributionError("Target rows must have positive mass.")
    targets = targets / mass

    support = targets > 0
    if np.any(support & (predicted <= 0)):
        raise InvalidDistributionError("Predicted mass is zero on the target support.")

    terms = np.zeros_like(targets)
    terms[support] = targets[support] * np.log(targets[support] / predicted[support])
    return terms.sum(axis=1)


def swav_kl(predicted: np.ndarray, targets: np.ndarray) -> float:
    """Mean over rows of ``KL(target || predicted)``."""
    return float(np.mean(swav_kl_rows(predicted, targets)))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax."""
    return np.exp(_log_softmax(np.asarray(logits, dtype=np.float64)))


def info_nce_batch(
    anchors: np.ndarray,
    positives: np.ndarray,
    tau: float = TAU,
    coef: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """InfoNCE over a batch with the other anchors as negatives.

    Returns:
        The per-pair losses and the gradients of ``sum(coef_i * L_i)`` with
        respect to the anchors and the positives. ``coef`` defaults to ones.
    """
    _check_tau(tau)
    n = anchors.shape[0]
    coef = np.ones(n) if coef is None else np.asarray(coef, dtype=np.float64)

    a, a_norm = normalize_rows(np.asarray(anchors, dtype=np.float64))
    b, b_norm = normalize_rows(np.asarray(positives, dtype=np.float64))

    negative_logits = a @ a.T / tau
    np.fill_diagonal(negative_logits, -np.inf)
    positive_logits = np.sum(a * b, axis=1) / tau
    logits = np.concatenate([positive_logits[:, np.newaxis], negative_logits], axis=1)
    log_probs = _log_softmax(logits)
    losses = -log_probs[:, 0]

    probs = np.exp(log_probs)
    pos_coef = (coef * (probs[:, 0] - 1.0))[:, np.newaxis]
    neg = coef[:, np.newaxis] * probs[:, 1:]
    g_a = (pos_coef * b + neg @ a + neg.T @ a) / tau
    g_b = pos_coef * a / tau

    return (
        losses,
        normalize_rows_backward(a, a_norm, g_a),
        normalize_rows_backward(b, b_norm, g_b),
    )


def neg_cosine_batch(
    predictions: np.ndarray, targets: np.ndarray, coef: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise negative cosine with constant targets.

    Returns:
        The per-pair losses and the gradient of ``sum(coef_i * L_i)`` with
        respect to the predictions.
    """
    n = predictions.shape[0]
    coef = np.ones(n) if coef is None else np.asarray(coef, dtype=np.float64)
    p, p_norm = normalize_rows(np.asarray(predictions, dtype=np.float64))
    z, _ = normalize_rows(np.asarray(targets, dtype=np.float64))

    losses = -np.sum(p * z, axis=1)
    grad = normalize_rows_backward(p, p_norm, -coef[:, np.newaxis] * z)
    return losses, grad


def swav_kl_batch(
    scores: np.ndarray,
    targets: np.ndarray,
    temperature: float,
    coef: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise KL between fixed targets and ``softmax(scores / temperature)``.

    Returns:
        The per-pair losses and the gradient of ``sum(coef_i * L_i)`` with
        respect to the scores.
    """
    _check_tau(temperature)
    n = scores.shape[0]
    coef = np.ones(n) if coef is None else np.asarray(coef, dtype=np.float64)
    predicted = softmax(scores / temperature)
    targets = targets / targets.sum(axis=1, keepdims=True)

    losses = swav_kl_rows(predicted, targets)
    grad = coef[:, np.newaxis] * (predicted - targets) / temperature
    return losses, grad
