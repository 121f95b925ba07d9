"""Exception hierarchy shared across the package."""


class ErgoError(Exception):
    """Base class for errors raised by this package."""


class ShapeError(ErgoError):
    """Operands have incompatible shapes."""


class DataError(ErgoError):
    """A corpus or embedding file violates its format contract."""


class ConfigError(ErgoError):
    """A run configuration is invalid."""


class NumericError(ErgoError):
    """A numeric failure: non-finite gradient, diverging loss, bad profile."""
