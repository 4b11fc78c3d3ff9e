"""Exception hierarchy shared across the package.

ConfigError maps to CLI exit code 1 (bad configuration / invalid request),
DataError to exit code 2 (unreadable or malformed input files).
"""


class CrosstagError(Exception):
    """Base class for all package errors."""


class ConfigError(CrosstagError):
    """Invalid configuration or API misuse."""


class DataError(CrosstagError):
    """Missing, malformed, or inconsistent input data."""
