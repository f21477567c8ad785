from pathlib import Path
from typing import Tuple

import click
import numpy as np

from ..click_custom import CustomCommand
from ..container import write_container
from ..exceptions import GenViewError, InvalidValueError
from ..generation import Calibration, calibrate_features, derive_rng
from ..options import common_options
from ..output import echo_success, echo_warning
from ..state import State, pass_state
from ..tensor import PcaProjector, as_feature_map
from ..utils import color_path, load_container, map_in_order, to_click_exception

CALIBRATION_KEYS = ("mean", "component", "threshold", "fitted_on", "proportion")


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Fit the projector and foreground threshold.",
)
@click.argument("features", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False, writable=True),
    metavar="PATH",
    required=True,
    help="Path of the calibration container to write.",
)
@common_options
@pass_state
def calibrate(state: State, features: str, out: str) -> None:
    """Fit the global PCA of FEATURES and calibrate the threshold.

    FEATURES is a container of (H, W, K) feature maps. The threshold marks
    about adaptive.target_fraction of all tokens as foreground.
    """
    config = state.load_config()
    maps = map_in_order(
        lambda _, fmap: as_feature_map(fmap), list(load_container(features).items())
    )

    try:
        projector, calibration = calibrate_features(
            maps,
            config["adaptive.target_fraction"],
            config["adaptive.pca_sample"],
            derive_rng(config.seed, "calibrate"),
        )
    except GenViewError as e:
        raise to_click_exception(e)

    if calibration.orientation_flip:
        echo_warning(
            f"Only {calibration.proportion:.1%} of tokens exceed the threshold "
            "with either component orientation."
        )
    write_container(out, calibration_tensors(projector, calibration))
    echo_success(
        f"threshold {calibration.threshold:.6g} marks {calibration.proportion:.1%} "
        f"of tokens as foreground. ({color_path(out)})"
    )


def calibration_tensors(projector: PcaProjector, calibration: Calibration) -> dict:
    """Return the tensors of a calibration container."""
    return {
        "mean": projector.mean,
        "component": projector.first_component,
        "threshold": np.array([calibration.threshold]),
        "fitted_on": np.array([projector.fitted_on]),
        "proportion": np.array([calibration.proportion]),
    }


def load_calibration(path: str) -> Tuple[PcaProjector, float]:
    """Read a calibration container written by ``calibrate``."""
    tensors = load_container(path)
    missing = [key for key in CALIBRATION_KEYS if key not in tensors]
    mean = tensors.get("mean", np.zeros(0))
    component = tensors.get("component", np.zeros(1))
    if missing or mean.ndim != 1 or component.shape != mean.shape:
        error = InvalidValueError(f"{Path(path).name}: not a calibration container")
        raise to_click_exception(error)

    projector = PcaProjector(
        mean.astype(np.float64),
        component.astype(np.float64),
        int(tensors["fitted_on"].ravel()[0]),
    )
    return projector, float(tensors["threshold"].ravel()[0])
