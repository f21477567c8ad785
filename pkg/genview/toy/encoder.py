"""Two-layer encoder with an optional predictor head and prototypes."""

from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from ..exceptions import InvalidConfigError, ShapeMismatchError

ACTIVATIONS = ("relu", "tanh", "none")


class EncoderConfig(NamedTuple):
    """Encoder sizes.

    ``prototypes`` is the number of prototype vectors kept for the
    swapped-assignment objective; 0 means none.
    """

    hidden_dim: int = 64
    embed_dim: int = 32
    activation: str = "relu"
    predictor: bool = False
    prototypes: int = 0


class Activations(NamedTuple):
    """Intermediate values of a forward pass, kept for the backward pass."""

    x: np.ndarray
    pre: np.ndarray
    h: np.ndarray
    z: np.ndarray
    p: Optional[np.ndarray]


def _activate(kind: str, pre: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "tanh":
        return np.tanh(pre)
    return pre


def _activation_grad(kind: str, pre: np.ndarray, h: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return (pre > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - h ** 2
    return np.ones_like(pre)


class ToyEncoder:
    """``h = act(x W1)``, ``z = h W2`` and optionally ``p = z W3``.

    Inputs are token grids flattened to vectors. Parameters live in
    ``params`` under the names ``W1``, ``W2``, ``W3`` and ``C``.
    """

    def __init__(self, params: Dict[str, np.ndarray], activation: str = "relu"):
        if activation not in ACTIVATIONS:
            raise InvalidConfigError(
                f"Unknown activation '{activation}'; expected one of {ACTIVATIONS}"
            )
        self.params = params
        self.activation = activation

    @classmethod
    def initialize(
        cls, input_dim: int, config: EncoderConfig, rng: np.random.Generator
    ) -> "ToyEncoder":
        """Draw weights from ``N(0, 1 / fan_in)``.

        Raises:
            InvalidConfigError: On non-positive sizes or an unknown activation.
        """
        if min(input_dim, config.hidden_dim, config.embed_dim) < 1:
            raise InvalidConfigError("Encoder sizes must be positive.")
        if config.prototypes < 0:
            raise InvalidConfigError(
                f"prototypes must be non-negative: {config.prototypes}"
            )

        def draw(fan_in: int, fan_out: int) -> np.ndarray:
            return rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)

        params = {
            "W1": draw(input_dim, config.hidden_dim),
            "W2": draw(config.hidden_dim, config.embed_dim),
        }
        if config.predictor:
            params["W3"] = draw(config.embed_dim, config.embed_dim)
        if config.prototypes:
            params["C"] = draw(config.embed_dim, config.prototypes)
        return cls(params, config.activation)

    @property
    def input_dim(self) -> int:
        return int(self.params["W1"].shape[0])

    @property
    def has_predictor(self) -> bool:
        return "W3" in self.params

    @property
    def prototypes(self) -> Optional[np.ndarray]:
        return self.params.get("C")

    def num_parameters(self) -> int:
        """Return the total number of scalar parameters."""
        return sum(int(p.size) for p in self.params.values())

    def flatten_inputs(self, views: np.ndarray) -> np.ndarray:
        """Flatten ``(n, H, W, K)`` or ``(H, W, K)`` views to ``(n, D)``.

        Raises:
            ShapeMismatchError: If the flattened size is not the input size.
        """
        views = np.asarray(views, dtype=np.float64)
        if views.ndim == 3:
            views = views[np.newaxis]
        x = views.reshape(views.shape[0], -1)
        if x.shape[1] != self.input_dim:
            raise ShapeMismatchError(
                f"Views flatten to {x.shape[1]} values; the encoder expects "
                f"{self.input_dim}"
            )
        return x

    def forward(self, views: np.ndarray) -> Activations:
        """Encode a batch of views."""
        x = self.flatten_inputs(views)
        pre = x @ self.params["W1"]
        h = _activate(self.activation, pre)
        z = h @ self.params["W2"]
        p = z @ self.params["W3"] if self.has_predictor else None
        return Activations(x, pre, h, z, p)

    def backward(
        self,
        acts: Activations,
        grad_z: Optional[np.ndarray] = None,
        grad_p: Optional[np.ndarray] = None,
    ) -> Dict[str, np.ndarray]:
        """Return parameter gradients for upstream gradients on z and p.

        The prototype gradient is not produced here; the objective adds it.
        """
        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        dz = np.zeros_like(acts.z) if grad_z is None else np.array(grad_z, dtype=float)
        if grad_p is not None:
            grads["W3"] = acts.z.T @ grad_p
            dz = dz + grad_p @ self.params["W3"].T

        grads["W2"] = acts.h.T @ dz
        dh = dz @ self.params["W2"].T
        dpre = dh * _activation_grad(self.activation, acts.pre, acts.h)
        grads["W1"] = acts.x.T @ dpre
        return grads

    def sgd_step(self, grads: Dict[str, np.ndarray], learning_rate: float) -> None:
        """Update the parameters in place."""
        for name, grad in grads.items():
            self.params[name] -= learning_rate * grad


def forward_pair(
    encoder: ToyEncoder, views_a: np.ndarray, views_b: np.ndarray
) -> Tuple[Activations, Activations]:
    """Encode both views of a batch of pairs.

    Raises:
        ShapeMismatchError: If the two batches differ in shape.
    """
    views_a = np.asarray(views_a)
    views_b = np.asarray(views_b)
    if views_a.shape != views_b.shape:
        raise ShapeMismatchError(
            f"View batches differ in shape: {views_a.shape} != {views_b.shape}"
        )
    return encoder.forward(views_a), encoder.forward(views_b)
