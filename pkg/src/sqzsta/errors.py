"""Exception types raised across the package."""


class SqzError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(SqzError, ValueError):
    pass


class InvalidFrequencyError(SqzError, ValueError):
    pass


class UnsupportedTemperatureError(SqzError, ValueError):
    pass


class InvalidStateError(SqzError, ValueError):
    pass


class DimensionMismatchError(SqzError, ValueError):
    pass


class DegenerateParameterError(SqzError, ValueError):
    pass


class UnsupportedRegimeError(SqzError, ValueError):
    pass


class OutOfDomainError(SqzError, ValueError):
    pass


class WrongBranchError(SqzError, ValueError):
    """Raised when a closed form is asked for outside the branch it covers."""


class CoverageError(SqzError, ValueError):
    pass


class InvalidScheduleError(SqzError, ValueError):
    pass


class SignSplitError(SqzError, ValueError):
    """A rate that must keep one sign changes sign along the schedule."""


class DesignInfeasibleError(SqzError):
    """No admissible control exists; ``time`` names the offending sample."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepSizeError(SqzError):
    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SpecError(SqzError, ValueError):
    """Malformed protocol specification."""
