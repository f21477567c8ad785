import click

from . import __version__
from .click_custom import CustomCommandCollection
from .commands.analyze import cli as analyze
from .commands.calibrate import cli as calibrate
from .commands.config import cli as config
from .commands.perturb import cli as perturb
from .commands.report import cli as report
from .commands.score import cli as score
from .commands.sweep import cli as sweep
from .commands.train import cli as train
from .commands.weights import cli as weights
from .options import version_option
from .state import State, pass_state


@click.group(
    cls=CustomCommandCollection,
    sources=[
        analyze,
        calibrate,
        config,
        perturb,
        report,
        score,
        sweep,
        train,
        weights,
    ],  # type: ignore
    help_options_color="cyan",
    invoke_without_command=True,
    context_settings=dict(help_option_names=["-h", "--help"]),
    short_help="Generated positive views with adaptive noise and quality weights.",
)
@version_option(__version__, "--version", "-V")
@pass_state
@click.pass_context
def cli(ctx: click.Context, state: State) -> None:
    """Generate positive views for contrastive learning and weight their pairs.

    The offline commands (calibrate, analyze, perturb) prepare generator
    requests from precomputed features; score and weights rate positive
    pairs; train, sweep and report run the toy experiments.
    """
    state.cli_name = str(ctx.find_root().info_name)

    if ctx.invoked_subcommand is None:
        click.echo(cli.get_help(ctx))
