from typing import TextIO

import click
import numpy as np

from ..click_custom import CustomCommand
from ..generation import analyze_foreground, derive_rng, select_noise_level
from ..options import common_options
from ..records import ANALYSIS_COLUMNS, write_table
from ..state import State, pass_state
from ..tensor import as_feature_map
from ..utils import load_container, map_in_order
from .calibrate import load_calibration


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Measure foreground proportions and select noise levels.",
)
@click.argument("features", type=click.Path(exists=True, dir_okay=False))
@click.argument("calibration", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-o",
    "--out",
    type=click.File("w", encoding="utf-8"),
    default="-",
    metavar="PATH",
    help="Path of the analysis table. [default: stdout]",
)
@click.option(
    "-j",
    "--jobs",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Number of worker threads.",
)
@common_options
@pass_state
def analyze(
    state: State, features: str, calibration: str, out: TextIO, jobs: int
) -> None:
    """Write one ``sample_id, p, l`` row per feature map of FEATURES.

    The noise level follows adaptive.strategy; every sample draws from its
    own random stream, so rows do not depend on --jobs.
    """
    config = state.load_config()
    projector, threshold = load_calibration(calibration)
    strategy = config.strategy

    def measure(sample_id: str, fmap: np.ndarray):
        analysis = analyze_foreground(as_feature_map(fmap), projector, threshold)
        rng = derive_rng(config.seed, "analyze", sample_id)
        level = select_noise_level(strategy, analysis.proportion, rng)
        return sample_id, analysis.proportion, level

    rows = map_in_order(measure, list(load_container(features).items()), jobs)
    write_table(out, ANALYSIS_COLUMNS, rows)
