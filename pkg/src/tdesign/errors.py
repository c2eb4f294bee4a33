"""Exception types raised across the package."""


class InvalidDimensionError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class CapacityError(MemoryError):
    pass


class UnsupportedError(NotImplementedError):
    pass


class UndefinedMeasureError(ValueError):
    pass


class InvalidOracleError(ValueError):
    pass


class InvalidSpecError(ValueError):
    pass


class InsufficientQueriesError(RuntimeError):
    pass


class BudgetError(RuntimeError):
    pass


class UsageError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Iterative solver hit its cap; ``best_estimate`` holds the last iterate's value."""

    def __init__(self, message: str, best_estimate: float, residual: float, iterations: int):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.residual = residual
        self.iterations = iterations
