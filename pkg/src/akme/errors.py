class AkmeError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(AkmeError, ValueError):
    pass


class WindowMismatchError(AkmeError, ValueError):
    pass


class PatternParseError(AkmeError, ValueError):
    pass


class CalibrationError(AkmeError, RuntimeError):
    """A simulator could not be calibrated to the requested expected count."""


class DegeneracyError(AkmeError):
    """Data too small or too degenerate for the requested statistic."""


class EmptyPatternError(DegeneracyError, ValueError):
    pass


class InsufficientPointsError(DegeneracyError, ValueError):
    pass
