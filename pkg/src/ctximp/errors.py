"""Exception hierarchy shared across the package.

Each class carries the process exit code used by the command line front end.
"""


class CtximpError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(CtximpError):
    """Invalid configuration: bad flag values, unknown generator names, etc."""

    exit_code = 2


class DataError(CtximpError):
    """Invalid input data: missing files, malformed CSV, schema mismatches."""

    exit_code = 3


class GuardExceededError(CtximpError):
    """A problem size guard was exceeded (enumeration would be intractable)."""

    exit_code = 4
