import inspect

import click

from .core import CustomOption


def custom_option(*param_decls, **attrs):
    """Attach a ``CustomOption`` to the command."""
    if "help" in attrs:
        attrs["help"] = inspect.cleandoc(attrs["help"])
    attrs.setdefault("cls", CustomOption)
    return click.option(*param_decls, **attrs)
