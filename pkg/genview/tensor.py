"""Dense tensor primitives shared by the analysis, scoring and training code.

Feature maps are ``(H, W, K)`` arrays, attention and scalar maps are
``(H, W)`` arrays. Every reduction is carried out in float64 whatever the
storage precision of the input.
"""

import logging
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from .config import (
    DENSE_EIGEN_MAX_DIM,
    FLAT_SPAN,
    POWER_MAX_ITER,
    POWER_TOL,
    ZERO_NORM,
)
from .exceptions import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    InvalidValueError,
    ZeroVectorError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


class PcaProjector(NamedTuple):
    """Mean and first principal component of a token sample.

    Attributes:
        mean: Sample mean, shape ``(K,)``.
        first_component: Unit eigenvector of the sample covariance with the
            largest eigenvalue, shape ``(K,)``.
        fitted_on: Number of samples used for the fit.
    """

    mean: np.ndarray
    first_component: np.ndarray
    fitted_on: int

    @property
    def dim(self) -> int:
        """Return the feature dimension."""
        return int(self.mean.shape[0])

    def flipped(self) -> "PcaProjector":
        """Return the projector with the opposite component orientation."""
        return self._replace(first_component=-self.first_component)


def as_feature_map(data: ArrayLike) -> np.ndarray:
    """Validate and convert data to a float64 ``(H, W, K)`` feature map.

    Raises:
        DimensionMismatchError: If data is not three dimensional or has an
            empty axis.
        InvalidValueError: If data contains non-finite values.
    """
    fmap = np.asarray(data, dtype=np.float64)
    if fmap.ndim != 3 or min(fmap.shape) < 1:
        raise DimensionMismatchError(
            f"A feature map must have shape (H, W, K) with H, W, K >= 1: {fmap.shape}"
        )
    if not np.all(np.isfinite(fmap)):
        raise InvalidValueError("The feature map contains non-finite values.")
    return fmap


def as_sample_matrix(samples: ArrayLike) -> np.ndarray:
    """Stack samples into a float64 ``(N, K)`` matrix.

    Raises:
        DimensionMismatchError: On ragged input.
    """
    if isinstance(samples, np.ndarray):
        if samples.ndim != 2:
            raise DimensionMismatchError(
                f"Samples must be a 2-d array of vectors: {samples.shape}"
            )
        return samples.astype(np.float64, copy=False)

    rows = [np.ravel(np.asarray(row, dtype=np.float64)) for row in samples]
    if len({row.shape[0] for row in rows}) > 1:
        raise DimensionMismatchError("All samples must have the same dimension.")
    if not rows:
        return np.zeros((0, 0))
    return np.vstack(rows)


def power_iteration(
    matrix: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER
) -> Tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric positive semi-definite matrix.

    Iterates from a fixed start vector and stops when the residual
    ``||A x - lambda x||`` drops below ``tol`` times the eigenvalue.
    """
    dim = matrix.shape[0]
    x = np.random.default_rng(0).standard_normal(dim)
    x /= np.linalg.norm(x)

    lam = 0.0
    for _ in range(max_iter):
        y = matrix @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, x
        lam = float(x @ y)
        x = y / norm
        residual = np.linalg.norm(matrix @ x - lam * x)
        if residual <= tol * max(abs(lam), 1.0):
            break
    else:
        logger.debug("power iteration stopped after %d iterations", max_iter)

    return float(x @ (matrix @ x)), x


def fit_pca(samples: ArrayLike) -> PcaProjector:
    """Fit the first principal component of a collection of vectors.

    The component is oriented so that its entry of largest absolute value
    is non-negative.

    Raises:
        DimensionMismatchError: On ragged input or fewer than two samples.
        DegenerateCovarianceError: If the covariance has no usable spread.
    """
    x = as_sample_matrix(samples)
    if x.shape[0] < 2:
        raise DimensionMismatchError(f"At least 2 samples are required: {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidValueError("Samples contain non-finite values.")

    mean = x.mean(axis=0)
    centered = x - mean
    covariance = centered.T @ centered / (x.shape[0] - 1)
    trace = float(np.trace(covariance))
    if trace <= 0.0:
        raise DegenerateCovarianceError("All samples are identical.")

    if covariance.shape[0] <= DENSE_EIGEN_MAX_DIM:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        top = float(eigenvalues[-1])
        component = eigenvectors[:, -1]
    else:
        top, component = power_iteration(covariance)

    if top < 1e-12 * trace:
        raise DegenerateCovarianceError(
            f"The top eigenvalue is numerically zero: {top:g} (trace {trace:g})"
        )

    component = component / np.linalg.norm(component)
    if component[int(np.argmax(np.abs(component)))] < 0:
        component = -component

    return PcaProjector(mean=mean, first_component=component, fitted_on=x.shape[0])


def orient_salient(projector: PcaProjector, samples: ArrayLike) -> PcaProjector:
    """Point the component at the sparse tail of the sample projections.

    Foreground tokens are a minority lying far out on one side of the
    component. The returned projector gives the projections of ``samples``
    a non-negative third central moment, so higher values mark foreground.
    """
    x = as_sample_matrix(samples)
    projections = (x - projector.mean) @ projector.first_component
    centered = projections - projections.mean()
    if float(np.mean(centered ** 3)) < 0.0:
        logger.debug("flipping the component toward the salient tail")
        return projector.flipped()
    return projector


def pooled_tokens(maps: Sequence[np.ndarray]) -> np.ndarray:
    """Stack the tokens of several feature maps into one ``(N, K)`` matrix."""
    if not maps:
        return np.zeros((0, 0))
    channels = {fmap.shape[-1] for fmap in maps}
    if len(channels) > 1:
        raise DimensionMismatchError("Feature maps have different channel counts.")
    tokens = [np.asarray(fmap, dtype=np.float64) for fmap in maps]
    return np.concatenate([t.reshape(-1, t.shape[-1]) for t in tokens])


def project_first_component(projector: PcaProjector, fmap: np.ndarray) -> np.ndarray:
    """Project every token of a feature map on the first component.

    Raises:
        DimensionMismatchError: If the channel count differs from the projector.
    """
    fmap = np.asarray(fmap, dtype=np.float64)
    if fmap.ndim != 3 or fmap.shape[2] != projector.dim:
        raise DimensionMismatchError(
            f"Expected a (H, W, {projector.dim}) feature map: {fmap.shape}"
        )
    return (fmap - projector.mean) @ projector.first_component


def min_max_normalize(smap: np.ndarray) -> np.ndarray:
    """Rescale a scalar map to [0, 1].

    A map whose span is below 1e-12 becomes 0.5 everywhere.

    Raises:
        InvalidValueError: If the map contains non-finite values.
    """
    smap = np.asarray(smap, dtype=np.float64)
    if not np.all(np.isfinite(smap)):
        raise InvalidValueError("The scalar map contains non-finite values.")

    low = smap.min()
    span = smap.max() - low
    if span < FLAT_SPAN:
        return np.full(smap.shape, 0.5)
    return (smap - low) / span


def attention_map(projector: PcaProjector, fmap: np.ndarray) -> np.ndarray:
    """Return the min-max normalized first-component projection of a map."""
    return min_max_normalize(project_first_component(projector, fmap))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Raises:
        DimensionMismatchError: If the vectors differ in length.
        ZeroVectorError: If either norm is at most 1e-12.
    """
    a = np.ravel(np.asarray(a, dtype=np.float64))
    b = np.ravel(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"Vector sizes differ: {a.shape[0]} != {b.shape[0]}"
        )

    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a <= ZERO_NORM or norm_b <= ZERO_NORM:
        raise ZeroVectorError("Cosine similarity of a zero vector is undefined.")
    return float(np.clip(a @ b / (norm_a * norm_b), -1.0, 1.0))


def spatial_aggregate(weights: np.ndarray, fmap: np.ndarray) -> np.ndarray:
    """Attention-weighted sum of the tokens of a feature map.

    Raises:
        DimensionMismatchError: If the spatial sizes differ.
    """
    weights = np.asarray(weights, dtype=np.float64)
    fmap = np.asarray(fmap, dtype=np.float64)
    if fmap.ndim != 3 or weights.shape != fmap.shape[:2]:
        raise DimensionMismatchError(
            f"Weights {weights.shape} do not match feature map {fmap.shape}"
        )
    return np.einsum("hw,hwk->k", weights, fmap)
