"""Exception hierarchy shared by the library and the command line."""


class PhotsubError(Exception):
    """Base class for all errors raised by photsub."""


class DomainError(PhotsubError, ValueError):
    """A parameter lies outside its physical range."""


class UndefinedStatisticError(PhotsubError, ArithmeticError):
    """A statistic is undefined for the given state (e.g. Fano factor of vacuum)."""


class ConditioningError(PhotsubError):
    """The conditioning event has (numerically) zero probability."""


class EmptySelectionError(ConditioningError):
    """No simulated shot satisfies the conditioning rule."""


class SaturationError(PhotsubError):
    """A detector received more photons than its linear range allows."""


class CalibrationError(PhotsubError):
    """Voltage data carry no usable comb structure."""


class ShotFileError(PhotsubError):
    """A shot file could not be parsed."""
