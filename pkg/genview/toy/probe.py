"""Linear probe on frozen features."""

import logging
import warnings
from typing import NamedTuple

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.preprocessing import StandardScaler

from ..exceptions import LengthMismatchError, OutOfRangeError, SingleClassError

logger = logging.getLogger(__name__)


class ProbeConfig(NamedTuple):
    """Split and solver settings of the linear probe.

    ``c`` is the inverse L2 regularization strength of the classifier and
    ``tol`` the solver's stopping tolerance.
    """

    test_fraction: float = 0.25
    c: float = 1.0
    max_iter: int = 500
    tol: float = 1e-6


def linear_probe(
    features: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator,
    config: ProbeConfig = ProbeConfig(),
) -> float:
    """Fit multinomial logistic regression and return the held-out accuracy.

    The held-out split is drawn from ``rng``; features are standardized with
    training statistics.

    Raises:
        LengthMismatchError: If features and labels differ in length.
        OutOfRangeError: If test_fraction is not in (0, 1).
        SingleClassError: If the training split holds a single class.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise LengthMismatchError(
            f"{labels.shape[0]} labels given for features of shape {features.shape}"
        )
    if not 0.0 < config.test_fraction < 1.0:
        raise OutOfRangeError(
            f"test_fraction must be in (0, 1): {config.test_fraction}"
        )

    n = features.shape[0]
    order = rng.permutation(n)
    n_test = min(n - 1, max(1, int(round(n * config.test_fraction))))
    test, train = order[:n_test], order[n_test:]
    if np.unique(labels[train]).size < 2:
        raise SingleClassError("The training split contains a single class.")

    scaler = StandardScaler().fit(features[train])
    classifier = LogisticRegression(
        C=config.c, max_iter=config.max_iter, tol=config.tol
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        classifier.fit(scaler.transform(features[train]), labels[train])
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        logger.debug("probe stopped after %d iterations", config.max_iter)

    predicted = classifier.predict(scaler.transform(features[test]))
    return float(np.mean(predicted == labels[test]))
