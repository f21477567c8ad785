import itertools
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from ..click_custom import CustomCommand
from ..exceptions import GenViewError
from ..options import common_options
from ..output import echo_success
from ..records import write_report
from ..settings import KEYS, RunConfig
from ..state import State, pass_state
from ..toy.trainer import ExperimentReport, run_experiment
from ..utils import color_path, map_in_order, run_with_spinner, to_click_exception
from .report import emit_table, format_option

MEDIAN_COLUMNS = (
    "probe_accuracy",
    "flip_rate",
    "view_fidelity",
    "corrupted_weight_win_rate",
)


def parse_grid(
    ctx: click.Context, param: click.Parameter, values: Tuple[str, ...]
) -> List[Tuple[str, List[str]]]:
    """Parse ``key=v1,v2`` grid axes."""
    axes = []
    for text in values:
        name, sep, choices = text.partition("=")
        name = name.strip()
        if not sep or not choices.strip():
            raise click.BadParameter(f"expected key=v1,v2,...: {text}")
        if name not in KEYS:
            raise click.BadParameter(f"unknown key '{name}'")
        if name == "seed":
            raise click.BadParameter("use --seeds to vary the seed")
        if name in (axis for axis, _ in axes):
            raise click.BadParameter(f"'{name}' is given twice")
        axes.append((name, [v.strip() for v in _split_values(choices)]))
    return axes


def _split_values(text: str) -> List[str]:
    # Commas inside parentheses belong to the value, as in CS(400).
    values, depth, current = [], 0, ""
    for char in text:
        if char == "," and depth == 0:
            values.append(current)
            current = ""
            continue
        depth += {"(": 1, ")": -1}.get(char, 0)
        current += char
    values.append(current)
    return [v for v in values if v.strip()]


def _median(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.median(present)) if present else None


def median_rows(
    cells: Sequence[Dict[str, str]], reports: Sequence[List[ExperimentReport]]
) -> List[List[Any]]:
    """Return one row per grid cell with the median of each metric."""
    rows = []
    for cell, runs in zip(cells, reports):
        row: List[Any] = list(cell.values()) + [len(runs)]
        for metric in MEDIAN_COLUMNS:
            row.append(_median([getattr(run, metric) for run in runs]))
        rows.append(row)
    return rows


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Train over a grid of settings and seeds.",
)
@click.option(
    "-g",
    "--grid",
    "axes",
    multiple=True,
    metavar="KEY=V1,V2",
    callback=parse_grid,
    help="Configuration key and the values to try. Can be given more than once.",
)
@click.option(
    "-n",
    "--seeds",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Runs per grid cell, seeded from seed, seed + 1, ...",
)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, writable=True),
    metavar="PATH",
    help="Directory to write one JSON report per run into.",
)
@click.option(
    "-j",
    "--jobs",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Number of runs trained at the same time.",
)
@format_option
@common_options
@pass_state
def sweep(
    state: State,
    axes: List[Tuple[str, List[str]]],
    seeds: int,
    out_dir: Optional[str],
    jobs: int,
    fmt: str,
) -> None:
    """Train every combination of the grid values and compare the medians.

    Every run is an independent ``train`` run; the table shows the median of
    each metric over the seeds of a grid cell.
    """
    base = state.load_config()
    names = [name for name, _ in axes]
    cells = [
        dict(zip(names, values))
        for values in itertools.product(*(choices for _, choices in axes))
    ]

    runs: List[Tuple[str, RunConfig]] = []
    for index, cell in enumerate(cells):
        for offset in range(seeds):
            values: Dict[str, Any] = dict(cell, seed=base.seed + offset)
            try:
                config = base.updated(values)
            except GenViewError as e:
                raise to_click_exception(e, f"cell {index}")
            runs.append((f"cell{index:03d}-seed{base.seed + offset}", config))

    def train(_: str, config: RunConfig) -> ExperimentReport:
        return run_experiment(
            config.data_config(), config.train_settings(), config.seed, config.as_dict()
        )

    reports = run_with_spinner(
        state.use_spinner,
        f"Training {len(runs)} runs...",
        lambda: map_in_order(train, runs, jobs),
    )

    if out_dir:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for (name, _), result in zip(runs, reports):
            write_report(directory / f"{name}.json", result.to_dict())
        echo_success(f"{len(reports)} reports written. ({color_path(directory)})")

    grouped = [reports[i * seeds : (i + 1) * seeds] for i in range(len(cells))]
    headers = names + ["runs"] + [f"median {m}" for m in MEDIAN_COLUMNS]
    emit_table(headers, median_rows(cells, grouped), fmt.lower())
