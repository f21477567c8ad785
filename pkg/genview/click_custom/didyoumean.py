# Classes under this module were originally taken from click-didyoumean,
# Copyright (c) 2016 Timo Furrer.
# These Classes are licensed under the MIT license.
# See https://github.com/click-contrib/click-didyoumean/blob/master/LICENSE.


import difflib
from typing import List

import click
from click import UsageError


def suggest(
    word: str, candidates: List[str], max_suggestions: int = 3, cutoff: float = 0.5
) -> str:
    """Return a "Did you mean" hint for word, or an empty string."""
    matches = difflib.get_close_matches(word, candidates, max_suggestions, cutoff)
    if len(matches) > 1:
        return "\n\nDid you mean one of these?\n\t" + "\n\t".join(matches)
    elif len(matches) > 0:
        return f"\n\nDid you mean this?\n\t{matches[0]}"
    return ""


class DYMMixin(object):
    """Mixin class to provide `Did you mean ...` suggestions."""

    def __init__(self, *args, **kwargs):
        self.max_suggestions = kwargs.pop("max_suggestions", 3)
        self.cutoff = kwargs.pop("cutoff", 0.5)
        super(DYMMixin, self).__init__(*args, **kwargs)

    def resolve_command(self, ctx, args):  # noqa: D102
        try:
            return super(DYMMixin, self).resolve_command(ctx, args)
        except UsageError as error:
            cmd_name = click.utils.make_str(args[0])
            cmd_list = self.list_commands(ctx)
            hint = suggest(cmd_name, cmd_list, self.max_suggestions, self.cutoff)
            raise UsageError(str(error) + hint, error.ctx) from None
