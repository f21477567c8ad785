from configparser import ConfigParser, Error as ConfigParserError
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    Iterator,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Tuple,
    Union,
)

import click

from .click_custom.didyoumean import suggest
from .config import (
    BETA_END,
    BETA_START,
    DENOISING_STEPS,
    GENERATOR_TAG,
    GUIDANCE_SCALE,
    NUM_STEPS,
    PCA_SAMPLE,
    SEED,
    SINKHORN_EPSILON,
    SINKHORN_ITERATIONS,
    TARGET_FRACTION,
    TAU,
)
from .exceptions import GenViewError, SettingsValueError
from .generation import NoiseSchedule, NoiseStrategy, build_noise_schedule
from .toy.data import AugmentationPolicy, DataConfig
from .toy.encoder import ACTIVATIONS, EncoderConfig
from .toy.objective import FAMILIES, LossConfig
from .toy.probe import ProbeConfig
from .toy.trainer import PROJECTORS, TrainerConfig, TrainSettings

_SECTION = "genview"


def _to_int_with_check(value: str, name: str, min_value: int) -> int:
    """Convert value to int.

    Raises:
        SettingsValueError: If conversion is not possible or value is less
        than min_value.
    """
    try:
        x = int(value)
    except ValueError:
        raise SettingsValueError(f"The {name} value is invalid: {value}") from None
    if x < min_value:
        th = min_value - 1
        raise SettingsValueError(f"The {name} value must be greater than {th}: {x}")
    return x


def _to_float_with_check(
    value: str,
    name: str,
    low: Optional[float] = None,
    high: Optional[float] = None,
    open_low: bool = False,
    open_high: bool = False,
) -> float:
    try:
        x = float(value)
    except ValueError:
        raise SettingsValueError(f"The {name} value is invalid: {value}") from None
    if x != x or x in (float("inf"), float("-inf")):
        raise SettingsValueError(f"The {name} value must be finite: {value}")
    if low is not None and (x < low or (open_low and x == low)):
        bound = f"greater than {low}" if open_low else f"at least {low}"
        raise SettingsValueError(f"The {name} value must be {bound}: {x}")
    if high is not None and (x > high or (open_high and x == high)):
        bound = f"less than {high}" if open_high else f"at most {high}"
        raise SettingsValueError(f"The {name} value must be {bound}: {x}")
    return x


def _to_bool(value: str, name: str) -> bool:
    try:
        return bool(click.BOOL.convert(value, None, None))
    except click.BadParameter:
        raise SettingsValueError(f"The {name} value is invalid: {value}") from None


def _to_choice(choices: Tuple[str, ...]) -> Callable[[str, str], str]:
    def convert(value: str, name: str) -> str:
        if value not in choices:
            options = ", ".join(choices)
            raise SettingsValueError(
                f"The {name} value must be one of {options}: {value}"
            )
        return value

    return convert


def _to_strategy(value: str, name: str) -> NoiseStrategy:
    try:
        return NoiseStrategy.parse(value)
    except GenViewError as e:
        raise SettingsValueError(f"The {name} value is invalid: {e}") from None


def _to_text(value: str, name: str) -> str:
    return value


def _int(min_value: int) -> Callable[[str, str], int]:
    return lambda value, name: _to_int_with_check(value, name, min_value)


def _float(
    low: Optional[float] = None,
    high: Optional[float] = None,
    open_low: bool = False,
    open_high: bool = False,
) -> Callable[[str, str], float]:
    return lambda value, name: _to_float_with_check(
        value, name, low, high, open_low, open_high
    )


def _fraction() -> Callable[[str, str], float]:
    return _float(0.0, 1.0, open_low=True, open_high=True)


class Key(NamedTuple):
    """One configuration key."""

    default: str
    convert: Callable[[str, str], Any]
    help: str


def _as_text(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    return str(value).strip()


def _key(default: Any, convert: Callable[[str, str], Any], help: str) -> Key:
    return Key(_as_text(default), convert, help)


KEYS: Dict[str, Key] = {
    "seed": _key(SEED, _int(0), "Master seed of every random stream."),
    "schedule.num_steps": _key(NUM_STEPS, _int(1), "Diffusion steps T."),
    "schedule.beta_start": _key(BETA_START, _fraction(), "First beta."),
    "schedule.beta_end": _key(BETA_END, _fraction(), "Last beta."),
    "adaptive.strategy": _key("AS", _to_strategy, "Noise strategy: CS(n), RS or AS."),
    "adaptive.target_fraction": _key(
        TARGET_FRACTION, _fraction(), "Foreground token target."
    ),
    "adaptive.pca_sample": _key(PCA_SAMPLE, _int(2), "Tokens used to fit the PCA."),
    "request.T": _key(DENOISING_STEPS, _int(1), "Generator denoising steps."),
    "request.guidance": _key(GUIDANCE_SCALE, _float(0.0), "Guidance scale."),
    "request.generator": _key(GENERATOR_TAG, _to_text, "Generator weights tag."),
    "quality.enabled": _key(True, _to_bool, "Weight pairs by quality."),
    "quality.projector": _key(
        "batch", _to_choice(PROJECTORS), "Projector of quality maps: batch or global."
    ),
    "quality.batch_size": _key(32, _int(1), "Pairs per batch in score output."),
    "loss.family": _key("info_nce", _to_choice(FAMILIES), "Contrastive objective."),
    "loss.tau": _key(TAU, _float(0.0, open_low=True), "InfoNCE temperature."),
    "loss.swav_temperature": _key(
        0.1, _float(0.0, open_low=True), "Prediction temperature of swav_kl."
    ),
    "loss.sinkhorn_epsilon": _key(
        SINKHORN_EPSILON, _float(0.0, open_low=True), "Sinkhorn entropy."
    ),
    "loss.sinkhorn_iterations": _key(SINKHORN_ITERATIONS, _int(1), "Sinkhorn rounds."),
    "data.num_classes": _key(4, _int(2), "Classes."),
    "data.samples_per_class": _key(64, _int(8), "Samples per class."),
    "data.height": _key(8, _int(1), "Grid height."),
    "data.width": _key(8, _int(1), "Grid width."),
    "data.channels": _key(16, _int(3), "Token dimension."),
    "data.environments": _key(4, _int(1), "Background textures."),
    "data.blob_min": _key(2, _int(1), "Smallest blob side."),
    "data.blob_max": _key(7, _int(1), "Largest blob side."),
    "data.noise_sigma": _key(0.1, _float(0.0), "Token noise."),
    "data.saliency": _key(3.0, _float(0.0), "Shared foreground direction scale."),
    "data.class_scale": _key(2.0, _float(0.0), "Class direction scale."),
    "data.background_scale": _key(1.0, _float(0.0), "Background texture scale."),
    "augment.crop_min": _key(0.5, _float(0.0, 1.0, True), "Smallest crop side."),
    "augment.crop_max": _key(1.0, _float(0.0, 1.0, True), "Largest crop side."),
    "augment.noise_sigma": _key(0.05, _float(0.0), "Augmentation noise."),
    "augment.drift_kappa": _key(1.0, _float(0.0), "Semantic drift of generated views."),
    "augment.alpha": _key(1.0, _float(0.0, 1.0), "Probability of a generated view."),
    "trainer.epochs": _key(20, _int(0), "Training epochs."),
    "trainer.batch_size": _key(32, _int(2), "Pairs per batch."),
    "trainer.learning_rate": _key(0.05, _float(0.0, open_low=True), "SGD step."),
    "trainer.hidden_dim": _key(64, _int(1), "Feature width."),
    "trainer.embed_dim": _key(32, _int(1), "Embedding width."),
    "trainer.activation": _key("relu", _to_choice(ACTIVATIONS), "Nonlinearity."),
    "trainer.predictor": _key(False, _to_bool, "Add a predictor head."),
    "trainer.regenerate_views": _key(False, _to_bool, "New views every epoch."),
    "probe.test_fraction": _key(0.25, _fraction(), "Held-out share."),
    "probe.c": _key(1.0, _float(0.0, open_low=True), "Inverse L2 strength."),
    "probe.max_iter": _key(500, _int(1), "Probe solver iterations."),
}


def _unknown_key_message(name: str, source: str) -> str:
    message = f"{source}: unknown key '{name}'"
    return message + suggest(name, list(KEYS))


class RunConfig(object):
    """Validated run configuration.

    Values are kept as text and converted on access, so a configuration can
    be dumped back exactly as it was given.

    Raises:
        SettingsValueError: On unknown keys, duplicate keys or invalid values.
    """

    def __init__(
        self, values: Optional[Mapping[str, str]] = None, source: str = "<defaults>"
    ):
        self._source = source
        self._text = {name: key.default for name, key in KEYS.items()}
        for name, value in (values or {}).items():
            if name not in KEYS:
                raise SettingsValueError(_unknown_key_message(name, source))
            self._text[name] = str(value).strip()
        self._values = {
            name: KEYS[name].convert(text, name) for name, text in self._text.items()
        }
        self._check()

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> "RunConfig":
        """Parse ``key = value`` lines."""
        parser = ConfigParser(delimiters=("=",), interpolation=None, strict=True)
        parser.optionxform = str  # type: ignore
        try:
            parser.read_string(f"[{_SECTION}]\n{text}", source=source)
        except ConfigParserError as e:
            message = str(e).replace(f"section '{_SECTION}': ", "")
            raise SettingsValueError(f"{source}: {message}") from None
        extra = [name for name in parser.sections() if name != _SECTION]
        if extra:
            raise SettingsValueError(
                f"{source}: sections are not supported: [{extra[0]}]"
            )
        return cls(dict(parser[_SECTION]), source)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Read a configuration file."""
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), str(path))

    def updated(self, values: Mapping[str, Any]) -> "RunConfig":
        """Return a copy with the given dotted keys replaced."""
        text = dict(self._text)
        for name, value in values.items():
            if name not in KEYS:
                raise SettingsValueError(_unknown_key_message(name, self._source))
            text[name] = _as_text(value)
        return RunConfig(text, self._source)

    def __getitem__(self, name: str) -> Any:
        try:
            return self._values[name]
        except KeyError:
            raise SettingsValueError(_unknown_key_message(name, self._source)) from None

    def __iter__(self) -> Iterator[str]:
        return iter(KEYS)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RunConfig) and self._text == other._text

    @property
    def source(self) -> str:
        return self._source

    def items(self) -> List[Tuple[str, str]]:
        """Return ``(key, text)`` pairs in schema order."""
        return [(name, self._text[name]) for name in KEYS]

    def as_dict(self) -> Dict[str, Any]:
        """Return JSON-compatible values in schema order."""
        data = {}
        for name in KEYS:
            value = self._values[name]
            data[name] = str(value) if isinstance(value, NoiseStrategy) else value
        return data

    def dump(self) -> str:
        """Return the configuration as ``key = value`` text."""
        lines = []
        for name, key in KEYS.items():
            lines.append(f"# {key.help}")
            lines.append(f"{name} = {self._text[name]}")
        return "\n".join(lines) + "\n"

    def _check(self) -> None:
        if self["schedule.beta_start"] > self["schedule.beta_end"]:
            raise SettingsValueError(
                "schedule.beta_start must not exceed schedule.beta_end."
            )
        if self["data.blob_min"] > self["data.blob_max"]:
            raise SettingsValueError("data.blob_min must not exceed data.blob_max.")
        if self["augment.crop_min"] > self["augment.crop_max"]:
            raise SettingsValueError(
                "augment.crop_min must not exceed augment.crop_max."
            )

    @property
    def seed(self) -> int:
        return int(self["seed"])

    @property
    def strategy(self) -> NoiseStrategy:
        return self["adaptive.strategy"]

    def noise_schedule(self) -> NoiseSchedule:
        """Build the forward-diffusion schedule."""
        return build_noise_schedule(
            self["schedule.num_steps"],
            self["schedule.beta_start"],
            self["schedule.beta_end"],
        )

    def data_config(self) -> DataConfig:
        return DataConfig(
            num_classes=self["data.num_classes"],
            samples_per_class=self["data.samples_per_class"],
            height=self["data.height"],
            width=self["data.width"],
            channels=self["data.channels"],
            num_environments=self["data.environments"],
            blob_min=self["data.blob_min"],
            blob_max=self["data.blob_max"],
            noise_sigma=self["data.noise_sigma"],
            saliency=self["data.saliency"],
            class_scale=self["data.class_scale"],
            background_scale=self["data.background_scale"],
        )

    def train_settings(self) -> TrainSettings:
        """Collect the settings of a training run."""
        return TrainSettings(
            encoder=EncoderConfig(
                hidden_dim=self["trainer.hidden_dim"],
                embed_dim=self["trainer.embed_dim"],
                activation=self["trainer.activation"],
                predictor=self["trainer.predictor"],
            ),
            loss=LossConfig(
                family=self["loss.family"],
                tau=self["loss.tau"],
                swav_temperature=self["loss.swav_temperature"],
                sinkhorn_epsilon=self["loss.sinkhorn_epsilon"],
                sinkhorn_iterations=self["loss.sinkhorn_iterations"],
            ),
            weighting="quality" if self["quality.enabled"] else "uniform",
            quality_projector=self["quality.projector"],
            strategy=self.strategy,
            augment=AugmentationPolicy(
                crop_min=self["augment.crop_min"],
                crop_max=self["augment.crop_max"],
                noise_sigma=self["augment.noise_sigma"],
                drift_kappa=self["augment.drift_kappa"],
                alpha=self["augment.alpha"],
            ),
            trainer=TrainerConfig(
                epochs=self["trainer.epochs"],
                batch_size=self["trainer.batch_size"],
                learning_rate=self["trainer.learning_rate"],
                regenerate_views=self["trainer.regenerate_views"],
            ),
            probe=ProbeConfig(
                test_fraction=self["probe.test_fraction"],
                c=self["probe.c"],
                max_iter=self["probe.max_iter"],
            ),
            target_fraction=self["adaptive.target_fraction"],
            pca_sample=self["adaptive.pca_sample"],
        )
