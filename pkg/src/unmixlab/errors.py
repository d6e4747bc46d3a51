"""Exception taxonomy shared across the toolkit.

The command-line layer maps these onto exit codes (config 2, data 3,
numerical 4); library code raises them directly.
"""


class UnmixlabError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(UnmixlabError):
    """Invalid configuration, bad parameters, or misuse of a stateful API."""


class DataError(UnmixlabError):
    """Missing, corrupt, or inconsistent input data."""


class CorruptFileError(DataError):
    """A cube/abundance file failed header or payload validation."""


class NumericalError(UnmixlabError):
    """A numerical procedure failed (divergence, rank deficiency, non-finite loss)."""
