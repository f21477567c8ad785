"""Synthetic token-grid images with known foreground and controllable drift.

Every image is a grid of K-dimensional tokens. A rectangular blob carries
the class signal, a shared salience direction plus a class direction, and
the rest of the grid is an environment texture that is independent of the
class. Generated views keep the blob size, move it to a new place and a new
environment and, with a probability that grows with the noise level and
shrinks with the foreground proportion, swap the class content.
"""

from typing import List, NamedTuple, Tuple

import numpy as np

from ..exceptions import InvalidConfigError, LevelOutOfRangeError, OutOfRangeError


class DataConfig(NamedTuple):
    """Shape and signal strengths of a synthetic dataset."""

    num_classes: int = 4
    samples_per_class: int = 64
    height: int = 8
    width: int = 8
    channels: int = 16
    num_environments: int = 4
    blob_min: int = 2
    blob_max: int = 7
    noise_sigma: float = 0.1
    saliency: float = 3.0
    class_scale: float = 2.0
    background_scale: float = 1.0


class AugmentationPolicy(NamedTuple):
    """Token-grid augmentations and the generated-view settings.

    Attributes:
        crop_min: Smallest crop side as a fraction of the grid side.
        crop_max: Largest crop side as a fraction of the grid side.
        noise_sigma: Standard deviation of additive token noise.
        drift_kappa: Scale of the semantic flip rate of generated views.
        alpha: Probability that a pair uses the generated view.
    """

    crop_min: float = 0.5
    crop_max: float = 1.0
    noise_sigma: float = 0.05
    drift_kappa: float = 1.0
    alpha: float = 1.0

    def validate(self) -> "AugmentationPolicy":
        """Check the ranges and return self.

        Raises:
            OutOfRangeError
        """
        if not 0.0 <= self.alpha <= 1.0:
            raise OutOfRangeError(f"alpha must be in [0, 1]: {self.alpha}")
        if not 0.0 < self.crop_min <= self.crop_max <= 1.0:
            raise OutOfRangeError(
                f"Crop fractions must satisfy 0 < min <= max <= 1: "
                f"{self.crop_min}, {self.crop_max}"
            )
        if self.noise_sigma < 0.0:
            raise OutOfRangeError(f"noise_sigma must be >= 0: {self.noise_sigma}")
        if self.drift_kappa < 0.0:
            raise OutOfRangeError(f"drift_kappa must be >= 0: {self.drift_kappa}")
        return self


class SyntheticSample(NamedTuple):
    """One synthetic image.

    ``class_id`` is the class whose content the blob carries and
    ``foreground_mask`` is the binary ground-truth blob.
    """

    image: np.ndarray
    class_id: int
    foreground_mask: np.ndarray
    environment_id: int
    sample_id: str = ""

    @property
    def true_proportion(self) -> float:
        """Return the ground-truth foreground proportion."""
        return float(self.foreground_mask.mean())

    def blob_size(self) -> Tuple[int, int]:
        """Return the blob height and width."""
        rows = np.flatnonzero(self.foreground_mask.any(axis=1))
        cols = np.flatnonzero(self.foreground_mask.any(axis=0))
        return int(rows.size), int(cols.size)


class SyntheticWorld(NamedTuple):
    """Class contents and environment textures shared by a dataset."""

    config: DataConfig
    class_means: np.ndarray
    environments: np.ndarray


class SyntheticDataset(NamedTuple):
    """A world and the samples drawn from it."""

    world: SyntheticWorld
    samples: List[SyntheticSample]

    @property
    def labels(self) -> np.ndarray:
        """Return the class ids of all samples."""
        return np.array([s.class_id for s in self.samples])

    @property
    def images(self) -> np.ndarray:
        """Return all images stacked as ``(N, H, W, K)``."""
        return np.stack([s.image for s in self.samples])


class GeneratedView(NamedTuple):
    """A simulated generator output and whether its semantics drifted."""

    sample: SyntheticSample
    flipped: bool


def _check_config(config: DataConfig) -> None:
    if config.num_classes < 2:
        raise InvalidConfigError(
            f"At least 2 classes are required: {config.num_classes}"
        )
    if config.samples_per_class < 8:
        raise InvalidConfigError(
            f"At least 8 samples per class are required: {config.samples_per_class}"
        )
    if min(config.height, config.width, config.num_environments) < 1:
        raise InvalidConfigError("Grid sizes and environment count must be positive.")
    if config.channels < config.num_classes + 1:
        raise InvalidConfigError(
            f"channels must exceed num_classes: {config.channels}, {config.num_classes}"
        )
    if not 1 <= config.blob_min <= config.blob_max <= min(config.height, config.width):
        raise InvalidConfigError(
            f"Blob sides must satisfy 1 <= min <= max <= grid side: "
            f"{config.blob_min}, {config.blob_max}"
        )
    if min(config.noise_sigma, config.background_scale) < 0.0:
        raise InvalidConfigError("Noise scales must be non-negative.")


def make_world(config: DataConfig, rng: np.random.Generator) -> SyntheticWorld:
    """Draw class contents and environment textures.

    The salience direction and the class directions are orthonormal, so with
    zero salience the class means are mutually orthogonal.
    """
    _check_config(config)
    directions = rng.standard_normal((config.channels, config.num_classes + 1))
    basis, _ = np.linalg.qr(directions)
    salience = basis[:, 0]
    class_means = config.saliency * salience + config.class_scale * basis[:, 1:].T

    environments = config.background_scale * rng.standard_normal(
        (config.num_environments, config.height, config.width, config.channels)
    )
    return SyntheticWorld(config, class_means, environments)


def render(
    world: SyntheticWorld,
    class_id: int,
    environment_id: int,
    blob: Tuple[int, int, int, int],
    rng: np.random.Generator,
    sample_id: str = "",
) -> SyntheticSample:
    """Render an image with the blob ``(top, left, height, width)``."""
    config = world.config
    top, left, blob_h, blob_w = blob
    shape = (config.height, config.width, config.channels)

    noise = config.noise_sigma * rng.standard_normal(shape)
    image = world.environments[environment_id] + noise
    mask = np.zeros(shape[:2])
    mask[top : top + blob_h, left : left + blob_w] = 1.0
    region = image[top : top + blob_h, left : left + blob_w]
    noise = config.noise_sigma * rng.standard_normal(region.shape)
    region[...] = world.class_means[class_id] + noise
    return SyntheticSample(image, int(class_id), mask, int(environment_id), sample_id)


def _place_blob(
    config: DataConfig, blob_h: int, blob_w: int, rng: np.random.Generator
) -> Tuple[int, int, int, int]:
    top = int(rng.integers(config.height - blob_h + 1))
    left = int(rng.integers(config.width - blob_w + 1))
    return top, left, blob_h, blob_w


def generate_dataset(config: DataConfig, rng: np.random.Generator) -> SyntheticDataset:
    """Generate ``num_classes * samples_per_class`` samples in class order.

    Raises:
        InvalidConfigError
    """
    world = make_world(config, rng)
    samples = []
    for class_id in range(config.num_classes):
        for _ in range(config.samples_per_class):
            environment_id = int(rng.integers(config.num_environments))
            blob_h = int(rng.integers(config.blob_min, config.blob_max + 1))
            blob_w = int(rng.integers(config.blob_min, config.blob_max + 1))
            blob = _place_blob(config, blob_h, blob_w, rng)
            sample_id = f"s{len(samples):05d}"
            sample = render(world, class_id, environment_id, blob, rng, sample_id)
            samples.append(sample)
    return SyntheticDataset(world, samples)


def flip_probability(level: int, drift_kappa: float, true_proportion: float) -> float:
    """Probability that a generated view loses the class content."""
    return min(1.0, drift_kappa * (level / 1000.0) * (1.0 - true_proportion))


def simulate_generative_view(
    world: SyntheticWorld,
    sample: SyntheticSample,
    level: int,
    drift_kappa: float,
    rng: np.random.Generator,
) -> GeneratedView:
    """Simulate the image an external generator would return.

    The background and the blob position are always resampled. The class
    content is replaced by a different class with
    ``flip_probability(level, drift_kappa, p_true)``.

    Raises:
        LevelOutOfRangeError: If level is outside [0, 1000].
        OutOfRangeError: If drift_kappa is negative.
    """
    if not 0 <= level <= 1000:
        raise LevelOutOfRangeError(f"Noise level must be in [0, 1000]: {level}")
    if drift_kappa < 0.0:
        raise OutOfRangeError(f"drift_kappa must be >= 0: {drift_kappa}")

    config = world.config
    environment_id = int(rng.integers(config.num_environments))
    blob = _place_blob(config, *sample.blob_size(), rng)

    probability = flip_probability(level, drift_kappa, sample.true_proportion)
    flipped = bool(rng.random() < probability)
    class_id = sample.class_id
    if flipped:
        offset = 1 + int(rng.integers(config.num_classes - 1))
        class_id = (class_id + offset) % config.num_classes

    view = render(world, class_id, environment_id, blob, rng, sample.sample_id)
    return GeneratedView(view, flipped)


def apply_genview_probability(alpha: float, rng: np.random.Generator) -> bool:
    """Decide whether a pair uses the generated view.

    Raises:
        OutOfRangeError: If alpha is outside [0, 1].
    """
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRangeError(f"alpha must be in [0, 1]: {alpha}")
    return bool(rng.random() < alpha)


def augment(
    image: np.ndarray, policy: AugmentationPolicy, rng: np.random.Generator
) -> np.ndarray:
    """Random resized crop and additive noise on a token grid.

    The crop is scaled back to the full grid by nearest-neighbour indexing.
    """
    height, width = image.shape[:2]
    fraction = rng.uniform(policy.crop_min, policy.crop_max)
    crop_h = max(1, int(round(fraction * height)))
    crop_w = max(1, int(round(fraction * width)))
    top = int(rng.integers(height - crop_h + 1))
    left = int(rng.integers(width - crop_w + 1))

    rows = top + (np.arange(height) * crop_h) // height
    cols = left + (np.arange(width) * crop_w) // width
    view = image[rows][:, cols]
    if policy.noise_sigma > 0.0:
        view = view + policy.noise_sigma * rng.standard_normal(view.shape)
    return view
