"""Exception types shared across the package."""


class SlideError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(SlideError, ValueError):
    pass


class DomainError(SlideError, ValueError):
    """Argument lies outside the domain where a formula is defined."""


class ConfigurationError(SlideError, ValueError):
    pass


class WidgetMismatchError(SlideError):
    def __init__(self, message, max_deviation=None):
        super().__init__(message)
        self.max_deviation = max_deviation


class ScheduleError(SlideError, ValueError):
    pass


class ShapeError(SlideError, ValueError):
    pass


class ResonanceError(SlideError, ArithmeticError):
    def __init__(self, message, energy=None):
        super().__init__(message)
        self.energy = energy


class NumericalError(SlideError, ArithmeticError):
    def __init__(self, message, achieved_tolerance=None):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance


class StatsError(SlideError, ValueError):
    pass


class TuningError(SlideError):
    pass


class ComparisonError(SlideError, ValueError):
    pass
