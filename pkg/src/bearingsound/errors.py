"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto its exit-code contract: ConfigError -> 1 (usage),
DataError and its subclasses -> 2 (data), NumericError -> 3 (numeric failure).
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid configuration value or combination."""


class DataError(PipelineError):
    """Input data is missing, malformed, or insufficient."""


class FormatError(DataError):
    """A binary or JSON artifact has a bad magic number, version, or layout."""


class NumericError(PipelineError):
    """A numeric procedure failed (e.g. training diverged)."""
