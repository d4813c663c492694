"""Exception types shared across the package."""


class BgbmError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BgbmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InputShapeError(BgbmError, ValueError):
    """Array arguments have incompatible shapes."""


class DataError(BgbmError, ValueError):
    """An input file or data table is malformed."""


class InsufficientDataError(BgbmError, ValueError):
    """Too few observations for the requested computation."""


class DegenerateDataError(BgbmError, ValueError):
    """Observations carry no usable variation (for example, all inter-trade
    times equal), so the moment equations cannot be inverted."""


class NumericalError(BgbmError, ArithmeticError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        #: error estimate actually reached, when the failing routine reports one
        self.achieved = achieved
