"""Exception types shared by all fracpar modules."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class AccuracyError(ArithmeticError):
    """A quadrature or extrapolation missed its requested tolerance.

    The achieved error estimate is kept in ``estimate`` so callers can
    decide whether to retry with a finer rule.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NumericError(ArithmeticError):
    """Linear-algebra failure (eigensolve, singular block, ...)."""


class ResourceError(RuntimeError):
    """Requested problem size exceeds the dense-solve budget."""
