from typing import List, Optional, TextIO

import click

from ..click_custom import CustomCommand
from ..exceptions import GenViewError, LengthMismatchError
from ..options import common_options
from ..quality import PairQuality, score_pairs
from ..records import QUALITY_COLUMNS, write_table
from ..state import State, pass_state
from ..tensor import as_feature_map
from ..utils import load_container, map_in_order, to_click_exception
from .calibrate import load_calibration


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Score the quality of positive pairs.",
)
@click.argument("features_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("features_b", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-o",
    "--out",
    type=click.File("w", encoding="utf-8"),
    default="-",
    metavar="PATH",
    help="Path of the quality table. [default: stdout]",
)
@click.option(
    "-b",
    "--batch-size",
    type=click.IntRange(min=1),
    help="Pairs per batch. [default: quality.batch_size]",
)
@click.option(
    "--calibration",
    type=click.Path(exists=True, dir_okay=False),
    metavar="PATH",
    help="Use the projector of a calibration container for every batch.",
)
@common_options
@pass_state
def score(
    state: State,
    features_a: str,
    features_b: str,
    out: TextIO,
    batch_size: Optional[int],
    calibration: Optional[str],
) -> None:
    """Score the pairs formed by equal ids in FEATURES_A and FEATURES_B.

    Pairs are batched in the order of FEATURES_A. Unless --calibration is
    given, the attention maps of a batch come from a projector fitted on the
    batch itself.
    """
    config = state.load_config()
    batch_size = batch_size or config["quality.batch_size"]
    projector = load_calibration(calibration)[0] if calibration else None

    tensors_a = load_container(features_a)
    tensors_b = load_container(features_b)
    if set(tensors_a) != set(tensors_b):
        unmatched = sorted(set(tensors_a) ^ set(tensors_b))
        error = LengthMismatchError(
            f"ids differ between the inputs: {', '.join(unmatched[:5])}"
        )
        raise to_click_exception(error)

    ids = list(tensors_a)
    maps_a = map_in_order(
        lambda _, fmap: as_feature_map(fmap), [(i, tensors_a[i]) for i in ids]
    )
    maps_b = map_in_order(
        lambda _, fmap: as_feature_map(fmap), [(i, tensors_b[i]) for i in ids]
    )

    rows = []
    for batch, start in enumerate(range(0, len(ids), batch_size)):
        stop = start + batch_size
        try:
            pairs: List[PairQuality] = score_pairs(
                maps_a[start:stop], maps_b[start:stop], projector
            )
        except GenViewError as e:
            raise to_click_exception(e, f"batch {batch}")
        for sample_id, pair in zip(ids[start:stop], pairs):
            rows.append((sample_id, batch, pair.s_f, pair.s_b, pair.q, pair.flagged))
    write_table(out, QUALITY_COLUMNS, rows)
