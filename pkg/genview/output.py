import json
import logging
from typing import Any, Iterable, Optional, Sequence

import click
from pygments import highlight
from pygments.formatters import TerminalFormatter
from pygments.lexers import JsonLexer
from tabulate import tabulate

_LEVEL_STYLES = {
    logging.DEBUG: ("Debug", "blue"),
    logging.INFO: ("Info", "cyan"),
    logging.WARNING: ("Warning", "yellow"),
    logging.ERROR: ("Error", "red"),
    logging.CRITICAL: ("Error", "red"),
}


def echo(message: Optional[str] = None) -> None:
    """Output data on stdout."""
    click.echo(message)


def echo_success(message: str) -> None:
    """Output success message on stderr."""
    click.echo(f"{click.style('Success', fg='green')}: {message}", err=True)


def echo_warning(message: str) -> None:
    """Output warning message on stderr."""
    click.echo(f"{click.style('Warning', fg='yellow')}: {message}", err=True)


def echo_json(
    data: object, sort_keys: bool = False, ensure_ascii: bool = False
) -> None:
    """Output json data, highlighted on a terminal."""
    body = json.dumps(data, sort_keys=sort_keys, ensure_ascii=ensure_ascii, indent=2)
    if click.get_text_stream("stdout").isatty():
        body = highlight(body, JsonLexer(), TerminalFormatter()).rstrip("\n")
    click.echo(body)


def echo_table(
    rows: Iterable[Sequence[Any]], headers: Sequence[str], tablefmt: str = "simple"
) -> None:
    """Output rows as a table."""
    click.echo(tabulate(list(rows), headers=headers, tablefmt=tablefmt))


class ClickLogHandler(logging.Handler):
    """Write log records to stderr with styled level prefixes."""

    def emit(self, record: logging.LogRecord) -> None:  # noqa: D102
        try:
            label, color = _LEVEL_STYLES.get(record.levelno, ("Info", "cyan"))
            message = self.format(record)
            click.echo(f"{click.style(label, fg=color)}: {message}", err=True)
        except Exception:
            self.handleError(record)


def setup_logging(verbose: bool = False) -> None:
    """Route the library loggers to stderr.

    Warnings are always shown; verbose mode shows everything.
    """
    logger = logging.getLogger("genview")
    for handler in list(logger.handlers):
        if isinstance(handler, ClickLogHandler):
            logger.removeHandler(handler)
    logger.addHandler(ClickLogHandler())
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False
