from pathlib import Path
from typing import Optional

import click

from .exceptions import GenViewError
from .settings import RunConfig
from .utils import to_click_exception


class State(object):
    """Manage state shared by the global options."""

    def __init__(self) -> None:
        self.verbose = False
        self.cli_name = "genview"
        self.config_path: Optional[Path] = None
        self.seed: Optional[int] = None

    @property
    def use_spinner(self) -> bool:
        """Flag to use spinner.

        True if verbose option is not set and stderr is a terminal.
        """
        return not self.verbose and click.get_text_stream("stderr").isatty()

    def load_config(self) -> RunConfig:
        """Read the run configuration and apply the seed override.

        Raises:
            ClickException: If the configuration is invalid.
        """
        try:
            if self.config_path is None:
                config = RunConfig()
            else:
                config = RunConfig.from_file(self.config_path)
            if self.seed is not None:
                config = config.updated({"seed": self.seed})
        except GenViewError as e:
            raise to_click_exception(e)
        return config


pass_state = click.make_pass_decorator(State, ensure=True)
