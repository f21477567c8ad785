from pathlib import Path
from platform import python_version
from typing import Any, Callable, Optional

import click
import numpy as np

from .click_custom import custom_option
from .output import setup_logging
from .state import State


def version_option(version, *param_decls, **kwargs):
    """Add --version option."""

    def callback(ctx, param, value):
        if not value or ctx.resilient_parsing:
            return

        cli_name = str(ctx.find_root().info_name)
        message = f"{cli_name} version {click.style(version, fg='cyan')}"
        if value > 1:
            message += f" (numpy {np.__version__}, Python {python_version()})"

        click.echo(message)
        ctx.exit()

    if not param_decls:
        param_decls = ("--version",)

    kwargs.setdefault("count", True)
    kwargs.setdefault("expose_value", False)
    kwargs.setdefault("is_eager", True)
    kwargs.setdefault(
        "help", "Show the version and exit. When given -VV, show more information."
    )
    kwargs["callback"] = callback

    return click.option(*param_decls, **kwargs)


def verbose_option(f: Callable) -> Callable:
    """Set verbose option."""

    def callback(ctx: click.Context, param: Any, value: bool) -> bool:
        state = ctx.ensure_object(State)
        state.verbose = state.verbose or value
        setup_logging(state.verbose)
        return value

    return custom_option(
        "-v",
        "--verbose",
        is_flag=True,
        expose_value=False,
        help="Show debug messages.",
        callback=callback,
        is_global=True,
    )(f)


def config_option(f: Callable) -> Callable:
    """Set config file option."""

    def callback(
        ctx: click.Context, param: Any, value: Optional[str]
    ) -> Optional[str]:
        state = ctx.ensure_object(State)
        if value:
            state.config_path = Path(value)
        return value

    return custom_option(
        "--config",
        type=click.Path(exists=True, dir_okay=False),
        metavar="PATH",
        expose_value=False,
        help="Read the run configuration from a key = value file.",
        callback=callback,
        is_global=True,
    )(f)


def seed_option(f: Callable) -> Callable:
    """Set seed override option."""

    def callback(ctx: click.Context, param: Any, value: Optional[int]) -> Optional[int]:
        state = ctx.ensure_object(State)
        if value is not None:
            state.seed = value
        return value

    return custom_option(
        "--seed",
        type=click.IntRange(min=0),
        expose_value=False,
        help="Override the seed of the configuration.",
        callback=callback,
        is_global=True,
    )(f)


def common_options(f: Callable) -> Callable:
    """Set common options."""
    f = verbose_option(f)
    f = seed_option(f)
    f = config_option(f)
    return f
