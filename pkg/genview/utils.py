from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import click
import numpy as np
from yaspin import yaspin

from .container import read_container
from .exceptions import ClickException, GenViewError

T = TypeVar("T")
R = TypeVar("R")


def to_click_exception(
    error: GenViewError, sample_id: Optional[str] = None
) -> ClickException:
    """Convert a library error to a styled ClickException.

    The exit code follows the error category and the sample id, when given,
    prefixes the message.
    """
    message = str(error)
    if sample_id is not None:
        message = f"{sample_id}: {message}"
    exception = ClickException(message)
    exception.exit_code = error.exit_code
    return exception


def run_with_spinner(use_spinner: bool, text: str, func: Callable[[], T]) -> T:
    """Call func, showing a spinner while it runs when use_spinner is set."""
    if use_spinner:
        with yaspin(text=text):
            return func()
    return func()


def color_id(value: Union[int, str]) -> str:
    """Set color to ID."""
    return click.style(str(value), fg="cyan")


def color_path(path: Union[str, Path]) -> str:
    """Set color to path."""
    return click.style(str(path), fg="blue")


def load_container(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a container, converting format errors to ClickException."""
    try:
        return read_container(path)
    except GenViewError as e:
        raise to_click_exception(e)


def map_in_order(
    func: Callable[[str, T], R], items: Sequence[Tuple[str, T]], jobs: int = 1
) -> List[R]:
    """Apply func to ``(sample_id, item)`` pairs, keeping input order.

    Errors are reported with the id of the failing sample.
    """

    def call(pair: Tuple[str, T]) -> R:
        sample_id, item = pair
        try:
            return func(sample_id, item)
        except GenViewError as e:
            raise to_click_exception(e, sample_id)

    if jobs <= 1:
        return [call(pair) for pair in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(call, items))
