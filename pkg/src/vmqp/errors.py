"""Exception hierarchy shared across the package."""


class VmqpError(Exception):
    """Base class for all package errors."""


class ConfigError(VmqpError):
    """Invalid or malformed run configuration."""


class DataError(VmqpError):
    """Invalid input data (CSV schema, units, missing values)."""


class NumericalError(VmqpError):
    """A numerical operation failed beyond recoverable tolerances."""
