"""Exception types shared across the package."""


class LongalmError(Exception):
    """Base class for package-specific failures."""


class ConfigError(LongalmError):
    """Malformed or inconsistent configuration input."""


class FitDegenerateError(LongalmError):
    """Mortality data cannot identify the survival-curve risk factors."""


class CatalogueError(LongalmError):
    """Strategy grid expansion failed validation."""


class ConvergenceError(LongalmError):
    """An iterative solver exhausted its budget before certifying a solution.

    Carries the best iterate found so callers can inspect or reuse it.
    """

    def __init__(self, message, *, best=None, value=None, residual=None,
                 iterations=None):
        super().__init__(message)
        self.best = best
        self.value = value
        self.residual = residual
        self.iterations = iterations
