"""Toy training loop with generated views and quality-driven reweighting.

A run has two phases. Offline, a projector is fitted on a sample of the
training images, the threshold is calibrated, every image's foreground
proportion is measured and one generated view is simulated per image at the
level chosen by the noise strategy. Online, every batch pairs an augmented
original with an augmented generated view (or a second augmentation of the
original), scores the pairs, turns the scores into weights and takes one SGD
step on the weighted objective.
"""

import logging
import time
from collections import Counter
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from ..config import PCA_SAMPLE, TARGET_FRACTION
from ..exceptions import DivergedLossError, InvalidConfigError
from ..generation import (
    Calibration,
    NoiseStrategy,
    analyze_foreground,
    calibrate_features,
    derive_rng,
    select_noise_level,
)
from ..quality import batch_weights, score_pairs
from ..tensor import PcaProjector, cosine_similarity
from .data import (
    AugmentationPolicy,
    DataConfig,
    SyntheticDataset,
    SyntheticSample,
    apply_genview_probability,
    augment,
    generate_dataset,
    simulate_generative_view,
)
from .encoder import EncoderConfig, ToyEncoder
from .objective import LossConfig, PairBatch, check_compatible, evaluate
from .probe import ProbeConfig, linear_probe

logger = logging.getLogger(__name__)

WEIGHTINGS = ("uniform", "quality")
PROJECTORS = ("batch", "global")


class TrainerConfig(NamedTuple):
    """Optimizer and schedule of a run.

    The learning rate applies to the batch total divided by the batch size.
    """

    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.05
    regenerate_views: bool = False


class TrainSettings(NamedTuple):
    """Everything a training run needs besides the dataset and the seed."""

    encoder: EncoderConfig = EncoderConfig()
    loss: LossConfig = LossConfig()
    weighting: str = "quality"
    quality_projector: str = "batch"
    strategy: NoiseStrategy = NoiseStrategy.adaptive()
    augment: AugmentationPolicy = AugmentationPolicy()
    trainer: TrainerConfig = TrainerConfig()
    probe: ProbeConfig = ProbeConfig()
    target_fraction: float = TARGET_FRACTION
    pca_sample: int = PCA_SAMPLE


class ExperimentReport(NamedTuple):
    """Outcome of one training run.

    Means are ``None`` when no pair of the corresponding kind was seen.
    ``wall_clock`` is in seconds and is left out of ``to_dict`` unless asked
    for, so that report files only depend on configuration and seed.
    """

    seed: int
    config: Dict[str, Any]
    epoch_losses: List[float]
    probe_accuracy: float
    mean_quality_clean: Optional[float]
    mean_quality_corrupted: Optional[float]
    mean_weight_clean: Optional[float]
    mean_weight_corrupted: Optional[float]
    corrupted_weight_win_rate: Optional[float]
    max_weight_spread: float
    flip_rate: float
    level_counts: Dict[str, int]
    view_fidelity: float
    wall_clock: float = 0.0

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        """Return the report as plain JSON-compatible data."""
        data = self._asdict()
        if not include_timing:
            del data["wall_clock"]
        return data


class OfflineViews(NamedTuple):
    """Result of the offline generation phase."""

    projector: PcaProjector
    threshold: float
    proportions: np.ndarray
    levels: List[int]
    views: List[SyntheticSample]
    flipped: np.ndarray


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def fit_global_projector(
    dataset: SyntheticDataset, settings: TrainSettings, rng: np.random.Generator
) -> Tuple[PcaProjector, Calibration]:
    """Fit the projector and threshold on the training images."""
    images = [s.image for s in dataset.samples]
    return calibrate_features(
        images, settings.target_fraction, settings.pca_sample, rng
    )


def generate_views(
    dataset: SyntheticDataset,
    settings: TrainSettings,
    projector: PcaProjector,
    threshold: float,
    rng: np.random.Generator,
) -> OfflineViews:
    """Measure every image and simulate its generated view."""
    proportions, levels, views, flipped = [], [], [], []
    for sample in dataset.samples:
        analysis = analyze_foreground(sample.image, projector, threshold)
        level = select_noise_level(settings.strategy, analysis.proportion, rng)
        generated = simulate_generative_view(
            dataset.world, sample, level, settings.augment.drift_kappa, rng
        )
        proportions.append(analysis.proportion)
        levels.append(level)
        views.append(generated.sample)
        flipped.append(generated.flipped)
    return OfflineViews(
        projector,
        threshold,
        np.array(proportions),
        levels,
        views,
        np.array(flipped, dtype=bool),
    )


def view_fidelity(dataset: SyntheticDataset, views: List[SyntheticSample]) -> float:
    """Mean cosine similarity of the mean-pooled tokens of originals and views."""
    scores = []
    for original, view in zip(dataset.samples, views):
        pooled_a = original.image.reshape(-1, original.image.shape[-1]).mean(axis=0)
        pooled_b = view.image.reshape(-1, view.image.shape[-1]).mean(axis=0)
        scores.append(cosine_similarity(pooled_a, pooled_b))
    return float(np.mean(scores))


def _check_settings(settings: TrainSettings) -> None:
    if settings.weighting not in WEIGHTINGS:
        raise InvalidConfigError(
            f"Unknown weighting '{settings.weighting}'; expected one of {WEIGHTINGS}"
        )
    if settings.quality_projector not in PROJECTORS:
        raise InvalidConfigError(
            f"Unknown quality projector '{settings.quality_projector}'; "
            f"expected one of {PROJECTORS}"
        )
    if settings.trainer.epochs < 0 or settings.trainer.batch_size < 2:
        raise InvalidConfigError("epochs must be >= 0 and batch_size >= 2.")
    if not settings.trainer.learning_rate > 0.0:
        raise InvalidConfigError(
            f"learning_rate must be positive: {settings.trainer.learning_rate}"
        )
    settings.augment.validate()


class _BatchStats:
    """Running pair statistics of a run."""

    def __init__(self):
        self.quality: Dict[bool, List[float]] = {False: [], True: []}
        self.weight: Dict[bool, List[float]] = {False: [], True: []}
        self.wins: List[bool] = []
        self.max_spread = 0.0
        self.generated = 0
        self.corrupted = 0

    def add(
        self, scores: np.ndarray, weights: np.ndarray, corrupted: np.ndarray
    ) -> None:
        for flag in (False, True):
            self.quality[flag].extend(scores[corrupted == flag].tolist())
            self.weight[flag].extend(weights[corrupted == flag].tolist())
        if corrupted.any() and not corrupted.all():
            lower = weights[corrupted].mean() < weights[~corrupted].mean()
            self.wins.append(bool(lower))
        self.max_spread = max(self.max_spread, float(weights.max() - weights.min()))


def _build_encoder(
    dataset: SyntheticDataset, settings: TrainSettings, seed: int
) -> ToyEncoder:
    config = settings.encoder
    if settings.loss.family == "neg_cosine" and not config.predictor:
        config = config._replace(predictor=True)
    if settings.loss.family == "swav_kl" and not config.prototypes:
        config = config._replace(prototypes=dataset.world.config.num_classes)
    input_dim = int(dataset.samples[0].image.size)
    encoder = ToyEncoder.initialize(input_dim, config, derive_rng(seed, "encoder"))
    check_compatible(encoder, settings.loss)
    return encoder


def train_run(
    dataset: SyntheticDataset,
    settings: TrainSettings,
    seed: int,
    config: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    """Train a toy encoder and probe its features.

    Every random stream is derived from ``seed``, so the report is fully
    determined by the dataset, the settings and the seed. ``config`` is
    copied into the report unchanged.

    Raises:
        InvalidConfigError: On inconsistent settings.
        DivergedLossError: If a batch loss is not finite.
    """
    _check_settings(settings)
    started = time.perf_counter()
    samples = dataset.samples
    encoder = _build_encoder(dataset, settings, seed)

    projector, calibration = fit_global_projector(
        dataset, settings, derive_rng(seed, "projector")
    )
    threshold = calibration.threshold
    offline = generate_views(
        dataset, settings, projector, threshold, derive_rng(seed, "views", "0")
    )
    level_counts = Counter(offline.levels)
    fidelities = [view_fidelity(dataset, offline.views)]
    quality_projector = projector if settings.quality_projector == "global" else None

    rng = derive_rng(seed, "train")
    policy = settings.augment
    batch_size = settings.trainer.batch_size
    epoch_losses: List[float] = []
    stats = _BatchStats()

    for epoch in range(settings.trainer.epochs):
        if epoch and settings.trainer.regenerate_views:
            views_rng = derive_rng(seed, "views", str(epoch))
            offline = generate_views(dataset, settings, projector, threshold, views_rng)
            level_counts.update(offline.levels)
            fidelities.append(view_fidelity(dataset, offline.views))

        order = rng.permutation(len(samples))
        batch_losses = []
        for start in range(0, len(order), batch_size):
            indices = order[start : start + batch_size]
            n = len(indices)
            if n < 2:
                continue
            views_a, views_b, corrupted = [], [], []
            for index in indices:
                use_generated = apply_genview_probability(policy.alpha, rng)
                source = offline.views[index] if use_generated else samples[index]
                views_a.append(augment(samples[index].image, policy, rng))
                views_b.append(augment(source.image, policy, rng))
                corrupted.append(bool(use_generated and offline.flipped[index]))
                stats.generated += int(use_generated)
            stats.corrupted += sum(corrupted)

            pairs = score_pairs(views_a, views_b, quality_projector)
            scores = np.array([pair.q for pair in pairs])
            if settings.weighting == "quality":
                weights = batch_weights(scores)
            else:
                weights = np.full(n, 1.0 / n)

            batch = PairBatch(np.stack(views_a), np.stack(views_b), weights)
            result = evaluate(encoder, batch, settings.loss)
            mean_loss = result.total / n
            if not np.isfinite(mean_loss):
                raise DivergedLossError(
                    f"Loss is not finite at epoch {epoch}, "
                    f"batch {start // batch_size}: {mean_loss}"
                )
            grads = {name: grad / n for name, grad in result.grads.items()}
            encoder.sgd_step(grads, settings.trainer.learning_rate)
            batch_losses.append(mean_loss)
            stats.add(scores, weights, np.array(corrupted))

        epoch_losses.append(float(np.mean(batch_losses)))
        logger.debug("epoch %d: loss %.6f", epoch, epoch_losses[-1])

    features = encoder.forward(dataset.images).h
    probe_rng = derive_rng(seed, "probe")
    accuracy = linear_probe(features, dataset.labels, probe_rng, settings.probe)
    logger.info("probe accuracy %.4f", accuracy)

    return ExperimentReport(
        seed=int(seed),
        config=dict(config or {}),
        epoch_losses=epoch_losses,
        probe_accuracy=accuracy,
        mean_quality_clean=_mean(stats.quality[False]),
        mean_quality_corrupted=_mean(stats.quality[True]),
        mean_weight_clean=_mean(stats.weight[False]),
        mean_weight_corrupted=_mean(stats.weight[True]),
        corrupted_weight_win_rate=_mean(stats.wins),
        max_weight_spread=stats.max_spread,
        flip_rate=stats.corrupted / stats.generated if stats.generated else 0.0,
        level_counts={str(lvl): level_counts[lvl] for lvl in sorted(level_counts)},
        view_fidelity=float(np.mean(fidelities)),
        wall_clock=time.perf_counter() - started,
    )


def run_experiment(
    data: DataConfig,
    settings: TrainSettings,
    seed: int,
    config: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    """Generate the dataset for ``seed`` and train on it."""
    dataset = generate_dataset(data, derive_rng(seed, "data"))
    return train_run(dataset, settings, seed, config)
