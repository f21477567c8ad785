import csv
import io
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import click

from ..click_custom import CustomCommand
from ..exceptions import GenViewError
from ..options import common_options
from ..output import echo_table
from ..records import format_value, read_report
from ..state import State, pass_state
from ..utils import to_click_exception

SETTING_COLUMNS = (
    ("strategy", "adaptive.strategy"),
    ("quality", "quality.enabled"),
    ("alpha", "augment.alpha"),
    ("loss", "loss.family"),
)
METRIC_COLUMNS = (
    "probe_accuracy",
    "flip_rate",
    "view_fidelity",
    "mean_weight_clean",
    "mean_weight_corrupted",
    "corrupted_weight_win_rate",
)
FORMATS = {"markdown": "github", "plain": "simple"}


def comparison_headers() -> List[str]:
    """Return the header of the comparison table."""
    return (
        ["run", "seed"]
        + [name for name, _ in SETTING_COLUMNS]
        + list(METRIC_COLUMNS)
    )


def comparison_row(label: str, report: Dict[str, Any]) -> List[Any]:
    """Return one comparison table row of a report."""
    config = report.get("config") or {}
    row = [label, report["seed"]]
    row.extend(config.get(key) for _, key in SETTING_COLUMNS)
    row.extend(report.get(metric) for metric in METRIC_COLUMNS)
    return row


def _cell(value: Any) -> Any:
    if value is None:
        return "-"
    if isinstance(value, float):
        return round(value, 4)
    return value


def emit_table(
    headers: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str
) -> None:
    """Write rows as CSV, or as a markdown or plain table."""
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow(["" if v is None else format_value(v) for v in row])
        click.echo(buffer.getvalue(), nl=False)
    else:
        echo_table(
            [[_cell(v) for v in row] for row in rows],
            headers=headers,
            tablefmt=FORMATS[fmt],
        )


def format_option(f):
    """Set table format option."""
    return click.option(
        "-f",
        "--format",
        "fmt",
        type=click.Choice(["markdown", "csv", "plain"], case_sensitive=False),
        default="markdown",
        show_default=True,
        help="Format of the comparison table.",
    )(f)


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Compare training reports.",
)
@click.argument(
    "reports", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False)
)
@format_option
@common_options
@pass_state
def report(state: State, reports: Tuple[str, ...], fmt: str) -> None:
    """Print one comparison row per report in REPORTS."""
    rows = []
    for path in reports:
        try:
            data = read_report(path)
        except GenViewError as e:
            raise to_click_exception(e)
        rows.append(comparison_row(Path(path).stem, data))
    emit_table(comparison_headers(), rows, fmt.lower())
