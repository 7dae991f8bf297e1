"""Exception hierarchy shared by every module of the package."""


class UqramError(Exception):
    """Base class for all errors raised by :mod:`uqram`."""


class ArgumentError(UqramError, ValueError):
    """An argument has the wrong shape, length, or range."""


class CapacityError(ArgumentError):
    """The requested problem exceeds the configured dimension budget."""


class UsageError(ArgumentError):
    """A command or experiment was invoked with an inconsistent configuration."""


class ParseError(ArgumentError):
    """A protocol document could not be parsed.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(ArgumentError):
    """A protocol document is well formed but violates the schema."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ValidationError(UqramError, ValueError):
    """A numerical invariant (Hermiticity, completeness, normalization) failed."""


class StateError(ValidationError):
    """An operator expected to be a density matrix is not one."""


class DegenerateInputError(UqramError, ValueError):
    """The input makes a requested quantity undefined (e.g. zero TV distance)."""
