"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class LiradsError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(LiradsError):
    """Invalid configuration or command usage."""

    exit_code = 1


class DataError(LiradsError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class InternalError(LiradsError):
    """Invariant violation; indicates a bug, not bad input."""

    exit_code = 3
