from typing import Any, Optional

import click


class ClickException(click.ClickException):
    """A click exception."""

    def show(self, file: Optional[Any] = None) -> None:
        """Show error message."""
        if file is None:
            file = click.get_text_stream("stderr")
        error = click.style("Error", fg="red")
        click.echo(f"{error}: {self.format_message()}", file=file)


class GenViewError(Exception):
    """Base class for exceptions in the genview library."""

    exit_code = 1


class ConfigError(GenViewError):
    """Raised when a configuration or parameter value is invalid."""

    exit_code = 2


class InputFormatError(GenViewError):
    """Raised when input data is malformed."""

    exit_code = 3


class NumericalError(GenViewError):
    """Raised when a computation cannot produce a meaningful result."""

    exit_code = 4


class SettingsValueError(ConfigError):
    """Raised when settings value is invalid."""


class InvalidRangeError(ConfigError):
    """Raised when a parameter range is inconsistent."""


class InvalidConstantError(ConfigError):
    """Raised when a constant noise level is not an allowed level."""


class InvalidTemperatureError(ConfigError):
    """Raised when a temperature is not strictly positive."""


class OutOfRangeError(ConfigError):
    """Raised when a value falls outside its allowed interval."""


class LevelOutOfRangeError(ConfigError):
    """Raised when a noise level exceeds the schedule."""


class InvalidConfigError(ConfigError):
    """Raised when a component configuration is unusable."""


class BadMagicError(InputFormatError):
    """Raised when a container does not start with the expected magic."""


class UnsupportedVersionError(InputFormatError):
    """Raised when a container version is unknown."""


class TruncatedFileError(InputFormatError):
    """Raised when a container ends before a declared field."""


class DuplicateIdError(InputFormatError):
    """Raised when an id occurs twice."""


class OversizeHeaderError(InputFormatError):
    """Raised when declared dimensions exceed the file length."""


class DimensionMismatchError(InputFormatError):
    """Raised when array dimensions do not agree."""


class ShapeMismatchError(InputFormatError):
    """Raised when a batch does not have the configured shape."""


class LengthMismatchError(InputFormatError):
    """Raised when two sequences must have equal length."""


class EmptyInputError(InputFormatError):
    """Raised when a collection must not be empty."""


class InvalidValueError(InputFormatError):
    """Raised when input contains non-finite values."""


class InvalidDistributionError(InputFormatError):
    """Raised when rows are not probability distributions."""


class DegenerateCovarianceError(NumericalError):
    """Raised when samples have no variance to analyse."""


class ZeroVectorError(NumericalError):
    """Raised when a vector norm vanishes."""


class NonFiniteError(NumericalError):
    """Raised when an intermediate result overflows."""


class DivergedLossError(NumericalError):
    """Raised when a training loss becomes non-finite."""


class SingleClassError(NumericalError):
    """Raised when a classifier sees fewer than two classes."""
