"""Exception hierarchy shared across the toolkit.

DataError (and subclasses) map to CLI exit code 2, ConfigError to exit
code 1.  Plain ValueError is reserved for programming/argument errors
inside the library.
"""


class FloodkitError(Exception):
    """Base class for all toolkit errors."""


class DataError(FloodkitError):
    """Input data cannot be processed (bad content, not bad usage)."""


class FormatError(DataError):
    """A file or byte stream violates its declared format."""


class SchemaError(DataError):
    """Feature names, columns, or shapes do not match what was expected."""


class ConfigError(FloodkitError):
    """Invalid configuration key, value, or command usage."""
