"""Exception hierarchy shared by every module."""


class QDPError(Exception):
    """Base class for all errors raised by qdpcomp."""


class NotHermitian(QDPError, ValueError):
    pass


class NumericalFailure(QDPError, ArithmeticError):
    pass


class DomainError(QDPError, ValueError):
    """A matrix function was asked for a value outside its domain."""


class DimensionMismatch(QDPError, ValueError):
    pass


class DimensionOverflow(QDPError, ValueError):
    pass


class ParameterOutOfRange(QDPError, ValueError):
    pass


class InvalidDelta(ParameterOutOfRange):
    pass


class GridMismatch(QDPError, ValueError):
    pass


class InfiniteMoment(QDPError, ArithmeticError):
    pass


class FitError(QDPError, ArithmeticError):
    pass


class FormatError(QDPError, ValueError):
    """Malformed input file. ``field`` names the offending JSON path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
