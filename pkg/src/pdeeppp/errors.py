"""Exception hierarchy shared across the package."""


class PdeepppError(Exception):
    """Base class for all package errors."""


class ShapeError(PdeepppError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(PdeepppError):
    """A precondition of an operation was violated."""


class EmptyInputError(ContractError):
    """An operation received an empty sequence or batch."""


class NumericError(PdeepppError):
    """Non-finite values or numeric divergence."""


class DataError(PdeepppError):
    """Malformed or inconsistent dataset content."""


class ParseError(DataError):
    """A file could not be parsed; message carries the location."""


class AlignmentError(DataError):
    """A record and its embedding disagree (missing id or length mismatch)."""


class UndefinedMetricError(PdeepppError):
    """A metric is undefined for the given label distribution."""


class ConfigError(PdeepppError):
    """Invalid configuration key or value."""
