"""Exception hierarchy shared by the library and the command line.

The CLI maps :class:`DataError` to exit code 1 and :class:`ConfigError`
to exit code 2.
"""


class TripleHelixError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TripleHelixError, ValueError):
    """The data cannot support the requested computation."""


class EmptyDatasetError(DataError):
    def __init__(self, message="empty dataset"):
        super().__init__(message)


class ValidationError(DataError):
    """A single value failed validation (bad NACE code, negative count...)."""


class ConfigError(TripleHelixError, ValueError):
    """Invalid analysis configuration, schema, or command-line options."""
