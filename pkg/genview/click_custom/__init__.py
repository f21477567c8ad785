from .core import (  # noqa F401
    CustomCommand,
    CustomCommandCollection,
    CustomGroup,
    CustomOption,
)
from .decorators import custom_option  # noqa F401
