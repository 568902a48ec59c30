"""Exception hierarchy.

Each class carries the process exit code the command line front end
reports for it.
"""


class StatregError(Exception):
    exit_code = 1


class ConfigError(StatregError, ValueError):
    """Malformed or inconsistent experiment configuration."""

    exit_code = 2


class DataError(StatregError, ValueError):
    """Invalid measures, regularities, streams or files."""

    exit_code = 3


class AlphabetMismatch(DataError):
    pass


class EstimationError(DataError):
    """A limit-set estimate could not be formed from the trajectory."""


class PreconditionError(StatregError, ValueError):
    """Input is well formed but outside what an operation can honour,
    e.g. a disconnected target handed to the single-sequence realizer."""

    exit_code = 4
