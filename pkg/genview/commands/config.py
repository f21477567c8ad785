import click

from ..click_custom import CustomCommand
from ..options import common_options
from ..output import echo, echo_table
from ..settings import KEYS
from ..state import State, pass_state


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Show the effective configuration.",
)
@click.option(
    "--dump",
    is_flag=True,
    help="Print the configuration as a key = value file.",
)
@common_options
@pass_state
def config(state: State, dump: bool) -> None:
    """Show the effective configuration.

    Values that differ from the defaults are highlighted. With --dump the
    output can be saved and passed back through --config.
    """
    run_config = state.load_config()
    if dump:
        click.echo(run_config.dump(), nl=False)
        return

    rows = []
    for name, text in run_config.items():
        value = text if text == KEYS[name].default else click.style(text, fg="yellow")
        rows.append([name, value, KEYS[name].help])
    echo_table(rows, headers=["Name", "Value", "Description"])
    echo(f"\nsource: {run_config.source}")
