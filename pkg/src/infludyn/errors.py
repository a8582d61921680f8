"""Exception hierarchy shared by every module."""


class InfludynError(Exception):
    """Base class for all package errors."""


class ShapeError(InfludynError, ValueError):
    pass


class ConfigError(InfludynError, ValueError):
    pass


class DataError(InfludynError, ValueError):
    pass


class NumericError(InfludynError, ArithmeticError):
    pass


class BundleError(DataError):
    """A network bundle or checkpoint on disk is missing or malformed."""


class MonotonicityError(DataError):
    pass


class RaggedWidthError(DataError):
    pass


class UnknownNodeError(DataError):
    pass


class DomainError(InfludynError, ValueError):
    """An operation was asked to work on an empty or invalid domain."""
