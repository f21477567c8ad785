from collections import OrderedDict
from typing import List, TextIO

import click

from ..click_custom import CustomCommand
from ..exceptions import GenViewError
from ..options import common_options
from ..quality import batch_weights
from ..records import WEIGHT_COLUMNS, read_quality, write_table
from ..state import State, pass_state
from ..utils import to_click_exception


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Turn quality scores into pair weights.",
)
@click.argument("quality", type=click.File("r", encoding="utf-8"))
@click.option(
    "-o",
    "--out",
    type=click.File("w", encoding="utf-8"),
    default="-",
    metavar="PATH",
    help="Path of the weight table. [default: stdout]",
)
@common_options
@pass_state
def weights(state: State, quality: TextIO, out: TextIO) -> None:
    """Softmax the ``q`` column of QUALITY within each batch.

    A table without a ``batch`` column is treated as a single batch.
    """
    try:
        rows = read_quality(quality)
    except GenViewError as e:
        raise to_click_exception(e)

    groups: "OrderedDict[int, List[int]]" = OrderedDict()
    for index, row in enumerate(rows):
        groups.setdefault(row.batch, []).append(index)

    w = [0.0] * len(rows)
    for batch, members in groups.items():
        try:
            group_weights = batch_weights([rows[i].q for i in members])
        except GenViewError as e:
            raise to_click_exception(e, f"batch {batch}")
        for index, weight in zip(members, group_weights):
            w[index] = float(weight)

    write_table(
        out,
        WEIGHT_COLUMNS,
        ((row.sample_id, row.batch, row.q, wi) for row, wi in zip(rows, w)),
    )
