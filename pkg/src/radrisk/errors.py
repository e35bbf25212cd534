"""Exception hierarchy shared by the library and the CLI.

The CLI maps each class to a process exit code: config errors exit 2,
data errors 3, numerical failures 4.
"""


class RadriskError(Exception):
    exit_code = 1


class ConfigError(RadriskError):
    """Bad configuration: unknown flags, missing files at startup, invalid parameters."""

    exit_code = 2


class DataError(RadriskError):
    """Malformed or inconsistent input data (files, manifests, masks, labels)."""

    exit_code = 3


class NumericalError(RadriskError):
    """Computation produced non-finite or otherwise unusable numbers."""

    exit_code = 4
