"""Adaptive view generation.

Measures how much of an image is foreground, turns that proportion into a
noise level, perturbs the conditional embedding with the forward diffusion
process and packages the result as a request for an external generator.
"""

import hashlib
import logging
import math
import re
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import (
    BETA_END,
    BETA_START,
    DENOISING_STEPS,
    GENERATOR_TAG,
    GUIDANCE_SCALE,
    MAX_NOISE_LEVEL,
    NOISE_LEVELS,
    NUM_STEPS,
    PCA_SAMPLE,
    TARGET_FRACTION,
)
from .exceptions import (
    EmptyInputError,
    InvalidConstantError,
    InvalidRangeError,
    LevelOutOfRangeError,
    OutOfRangeError,
)
from .tensor import (
    PcaProjector,
    attention_map,
    fit_pca,
    orient_salient,
    pooled_tokens,
)

logger = logging.getLogger(__name__)


class NoiseSchedule(NamedTuple):
    """Linear forward-diffusion schedule.

    ``alpha_bars`` has ``num_steps + 1`` entries; ``alpha_bars[0]`` is 1 so
    that level 0 leaves an embedding untouched.
    """

    num_steps: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray


class Calibration(NamedTuple):
    """Result of threshold calibration.

    Attributes:
        threshold: Attention value above which a token counts as foreground.
        proportion: Fraction of pooled values strictly above the threshold.
        orientation_flip: True when too few values exceed the threshold,
            which suggests the principal component points at the background.
    """

    threshold: float
    proportion: float
    orientation_flip: bool


class NoiseStrategy(NamedTuple):
    """Noise level selection strategy.

    ``kind`` is one of ``constant``, ``random`` or ``adaptive``; ``constant``
    carries the level in ``level``.
    """

    kind: str
    level: Optional[int] = None

    @classmethod
    def constant(cls, level: int) -> "NoiseStrategy":
        """Create a constant selection strategy."""
        if level not in NOISE_LEVELS:
            raise InvalidConstantError(
                f"Constant level must be one of {NOISE_LEVELS}: {level}"
            )
        return cls("constant", level)

    @classmethod
    def random(cls) -> "NoiseStrategy":
        """Create a random selection strategy."""
        return cls("random")

    @classmethod
    def adaptive(cls) -> "NoiseStrategy":
        """Create an adaptive selection strategy."""
        return cls("adaptive")

    @classmethod
    def parse(cls, text: str) -> "NoiseStrategy":
        """Parse ``CS(200)``, ``RS``, ``AS`` or the long names.

        Examples:
            >>> NoiseStrategy.parse("cs(400)")
            NoiseStrategy(kind='constant', level=400)
            >>> NoiseStrategy.parse("adaptive")
            NoiseStrategy(kind='adaptive', level=None)
        """
        value = text.strip().lower()
        match = re.fullmatch(r"(?:cs|constant)\s*[(:]\s*(\d+)\s*\)?", value)
        if match:
            return cls.constant(int(match.group(1)))
        if value in ("rs", "random"):
            return cls.random()
        if value in ("as", "adaptive"):
            return cls.adaptive()
        raise InvalidConstantError(
            f"Unknown strategy: {text!r}. Use CS(<level>), RS or AS."
        )

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"CS({self.level})"
        return "RS" if self.kind == "random" else "AS"


class ForegroundAnalysis(NamedTuple):
    """Foreground measurement of one image."""

    proportion: float
    threshold: float
    noise_level: int
    attention: np.ndarray


class GeneratorRequest(NamedTuple):
    """Everything an external image generator needs to realise a view.

    ``latent_seed`` stands in for the initial latent noise and
    ``generator_tag`` for the pretrained generator weights.
    """

    sample_id: str
    noised_embedding: np.ndarray
    noise_level: int
    denoising_steps: int = DENOISING_STEPS
    guidance_scale: float = GUIDANCE_SCALE
    latent_seed: int = 0
    generator_tag: str = GENERATOR_TAG


def derive_rng(seed: int, *keys: str) -> np.random.Generator:
    """Return an independent generator for ``(seed, keys...)``.

    The stream depends only on the seed and the keys, never on the order in
    which items are processed.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for key in keys:
        digest = hashlib.sha256(str(key).encode()).digest()
        entropy.append(int.from_bytes(digest[:8], "little"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def build_noise_schedule(
    num_steps: int = NUM_STEPS,
    beta_start: float = BETA_START,
    beta_end: float = BETA_END,
) -> NoiseSchedule:
    """Build the linear beta schedule and its cumulative products.

    Raises:
        InvalidRangeError: Unless ``0 < beta_start <= beta_end < 1`` and
            ``num_steps >= 1``.
    """
    if num_steps < 1:
        raise InvalidRangeError(f"num_steps must be at least 1: {num_steps}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise InvalidRangeError(
            f"Betas must satisfy 0 < start <= end < 1: {beta_start}, {beta_end}"
        )

    if num_steps == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        step = (beta_end - beta_start) / (num_steps - 1)
        betas = beta_start + np.arange(num_steps, dtype=np.float64) * step
    alphas = 1.0 - betas
    alpha_bars = np.concatenate([[1.0], np.cumprod(alphas)])

    return NoiseSchedule(
        num_steps=int(num_steps), betas=betas, alphas=alphas, alpha_bars=alpha_bars
    )


def calibrate_threshold(
    attention_maps: Sequence[np.ndarray], target_fraction: float = TARGET_FRACTION
) -> Calibration:
    """Choose the threshold that marks ``target_fraction`` of tokens foreground.

    Candidate thresholds are the distinct pooled values; the winner is the
    one whose fraction of strictly greater values is closest to the target,
    the smallest such value on ties.

    Raises:
        EmptyInputError: If there are no attention values.
        OutOfRangeError: If target_fraction is not in (0, 1).
    """
    if not 0.0 < target_fraction < 1.0:
        raise OutOfRangeError(f"target_fraction must be in (0, 1): {target_fraction}")
    if len(attention_maps) == 0:
        raise EmptyInputError("No attention maps to calibrate on.")

    values = np.concatenate([np.ravel(a) for a in attention_maps])
    if values.size == 0:
        raise EmptyInputError("No attention values to calibrate on.")

    uniques, counts = np.unique(values, return_counts=True)
    above = values.size - np.cumsum(counts)
    fractions = above / values.size
    best = int(np.argmin(np.abs(fractions - target_fraction)))

    threshold = float(uniques[best])
    proportion = float(fractions[best])
    orientation_flip = proportion < 0.5 * target_fraction
    if orientation_flip:
        logger.warning(
            "only %.1f%% of tokens exceed the threshold; "
            "the component orientation may need flipping",
            100 * proportion,
        )

    return Calibration(threshold, proportion, orientation_flip)


def foreground_proportion(attention: np.ndarray, threshold: float) -> float:
    """Fraction of attention entries strictly above the threshold."""
    attention = np.asarray(attention)
    return np.count_nonzero(attention > threshold) / attention.size


def adaptive_noise_level(proportion: float) -> int:
    """Map a foreground proportion to a noise level in steps of 100.

    The interval [0, 1] is split into five bins of width 0.2 and the level
    is capped at 400. The bin quotient is rounded to nine decimals before
    flooring so that decimal boundaries such as 0.6 land in the upper bin.

    Raises:
        OutOfRangeError: If the proportion is outside [0, 1].
    """
    if not 0.0 <= proportion <= 1.0:
        raise OutOfRangeError(f"Proportion must be in [0, 1]: {proportion}")
    bins = math.floor(round(proportion / 0.2, 9))
    return min(100 * bins, MAX_NOISE_LEVEL)


def select_noise_level(
    strategy: NoiseStrategy, proportion: float, rng: np.random.Generator
) -> int:
    """Select a noise level for one image.

    Raises:
        InvalidConstantError: If a constant strategy holds an unknown level.
    """
    if strategy.kind == "constant":
        if strategy.level not in NOISE_LEVELS:
            raise InvalidConstantError(f"Invalid constant level: {strategy.level}")
        return int(strategy.level)
    if strategy.kind == "random":
        return NOISE_LEVELS[int(rng.integers(len(NOISE_LEVELS)))]
    if strategy.kind == "adaptive":
        return adaptive_noise_level(proportion)
    raise InvalidConstantError(f"Unknown strategy kind: {strategy.kind}")


def noisy_embedding(
    embedding: np.ndarray,
    level: int,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> np.ndarray:
    """Apply ``level`` forward-diffusion steps to an embedding in one jump.

    Level 0 returns a copy of the embedding without drawing from ``rng``.

    Raises:
        LevelOutOfRangeError: If level is outside ``[0, schedule.num_steps]``.
    """
    if not 0 <= level <= schedule.num_steps:
        raise LevelOutOfRangeError(
            f"Noise level must be in [0, {schedule.num_steps}]: {level}"
        )
    embedding = np.asarray(embedding, dtype=np.float64)
    if level == 0:
        return embedding.copy()

    alpha_bar = schedule.alpha_bars[level]
    noise = rng.standard_normal(embedding.shape)
    return np.sqrt(alpha_bar) * embedding + np.sqrt(1.0 - alpha_bar) * noise


def draw_latent_seed(rng: np.random.Generator) -> int:
    """Draw a 64-bit seed for the generator's initial latent noise."""
    return int(rng.integers(0, 2 ** 64 - 1, dtype=np.uint64, endpoint=True))


def make_request(
    sample_id: str,
    embedding: np.ndarray,
    level: int,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    denoising_steps: int = DENOISING_STEPS,
    guidance_scale: float = GUIDANCE_SCALE,
    generator_tag: str = GENERATOR_TAG,
) -> GeneratorRequest:
    """Perturb an embedding and package it as a generator request.

    Raises:
        OutOfRangeError: If denoising_steps is less than 1.
    """
    if denoising_steps < 1:
        raise OutOfRangeError(f"denoising_steps must be at least 1: {denoising_steps}")
    noised = noisy_embedding(embedding, level, schedule, rng)
    return GeneratorRequest(
        sample_id=sample_id,
        noised_embedding=noised,
        noise_level=int(level),
        denoising_steps=int(denoising_steps),
        guidance_scale=float(guidance_scale),
        latent_seed=draw_latent_seed(rng),
        generator_tag=generator_tag,
    )


def analyze_foreground(
    fmap: np.ndarray, projector: PcaProjector, threshold: float
) -> ForegroundAnalysis:
    """Measure the foreground proportion of one feature map."""
    attention = attention_map(projector, fmap)
    proportion = foreground_proportion(attention, threshold)
    return ForegroundAnalysis(
        proportion=proportion,
        threshold=float(threshold),
        noise_level=adaptive_noise_level(proportion),
        attention=attention,
    )


def analyze_and_request(
    sample_id: str,
    embedding: np.ndarray,
    fmap: np.ndarray,
    projector: PcaProjector,
    threshold: float,
    strategy: NoiseStrategy,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    denoising_steps: int = DENOISING_STEPS,
    guidance_scale: float = GUIDANCE_SCALE,
    generator_tag: str = GENERATOR_TAG,
) -> Tuple[ForegroundAnalysis, GeneratorRequest]:
    """Run the offline generation step for one image.

    The random stream is consumed in a fixed order: level selection, then
    embedding noise, then the latent seed.
    """
    analysis = analyze_foreground(fmap, projector, threshold)
    level = select_noise_level(strategy, analysis.proportion, rng)
    request = make_request(
        sample_id,
        embedding,
        level,
        schedule,
        rng,
        denoising_steps=denoising_steps,
        guidance_scale=guidance_scale,
        generator_tag=generator_tag,
    )
    logger.debug(
        "%s: p=%.4f level=%d", sample_id, analysis.proportion, request.noise_level
    )
    return analysis, request


def calibrate_projector(
    attention_maps_for: Callable[[PcaProjector], Sequence[np.ndarray]],
    projector: PcaProjector,
    target_fraction: float = TARGET_FRACTION,
) -> Tuple[PcaProjector, Calibration]:
    """Calibrate a threshold and retry with the flipped component if advised.

    ``attention_maps_for`` returns the attention maps of the calibration
    sample under a given projector. The flipped projector is kept only when
    it no longer raises the orientation advisory.
    """
    calibration = calibrate_threshold(attention_maps_for(projector), target_fraction)
    if not calibration.orientation_flip:
        return projector, calibration

    flipped = projector.flipped()
    retry = calibrate_threshold(attention_maps_for(flipped), target_fraction)
    if retry.orientation_flip:
        return projector, calibration
    logger.info("using the flipped component orientation")
    return flipped, retry


def calibrate_features(
    maps: Sequence[np.ndarray],
    target_fraction: float = TARGET_FRACTION,
    pca_sample: int = PCA_SAMPLE,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[PcaProjector, Calibration]:
    """Fit the global projector and threshold of a collection of feature maps.

    At most ``pca_sample`` pooled tokens, drawn without replacement, are used
    for the fit and the component is pointed at the salient tail of those
    tokens. The threshold is calibrated on the attention maps of every
    feature map.

    Raises:
        EmptyInputError: If there are no feature maps.
        DegenerateCovarianceError: If the tokens have no spread.
    """
    if len(maps) == 0:
        raise EmptyInputError("No feature maps to calibrate on.")
    tokens = pooled_tokens(maps)
    if tokens.shape[0] > pca_sample:
        rng = rng if rng is not None else np.random.default_rng(0)
        rows = np.sort(rng.choice(tokens.shape[0], size=pca_sample, replace=False))
        tokens = tokens[rows]
    projector = orient_salient(fit_pca(tokens), tokens)
    logger.debug("fitted the projector on %d tokens", tokens.shape[0])
    return calibrate_projector(
        lambda p: [attention_map(p, fmap) for fmap in maps], projector, target_fraction
    )
