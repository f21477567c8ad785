from typing import Optional

import click

from ..click_custom import CustomCommand
from ..exceptions import GenViewError
from ..options import common_options
from ..output import echo_json, echo_success
from ..records import write_report
from ..state import State, pass_state
from ..toy.trainer import run_experiment
from ..utils import color_path, run_with_spinner, to_click_exception


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Train the toy encoder and report the probe accuracy.",
)
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False, writable=True),
    metavar="PATH",
    help="Path of the JSON report. [default: stdout]",
)
@common_options
@pass_state
def train(state: State, out: Optional[str]) -> None:
    """Run one seeded toy experiment.

    The synthetic dataset, the generated views and the training run are all
    determined by the configuration and the seed; the report records both.
    """
    config = state.load_config()

    try:
        report = run_with_spinner(
            state.use_spinner,
            "Training...",
            lambda: run_experiment(
                config.data_config(),
                config.train_settings(),
                config.seed,
                config.as_dict(),
            ),
        )
    except GenViewError as e:
        raise to_click_exception(e)

    if out:
        write_report(out, report.to_dict())
        echo_success(
            f"probe accuracy {report.probe_accuracy:.4f} "
            f"in {report.wall_clock:.1f}s. ({color_path(out)})"
        )
    else:
        echo_json(report.to_dict(), sort_keys=True)
        click.echo(f"Finished in {report.wall_clock:.1f}s.", err=True)
