"""Exception hierarchy shared by every statdisc module."""


class StatdiscError(Exception):
    """Base class for all library errors."""


class InvalidInputError(StatdiscError, ValueError):
    """Malformed input: wrong shapes, non-finite entries, non-Hermitian data."""


class PreconditionError(StatdiscError, ValueError):
    """Input is well formed but violates an operation's precondition."""


class SingularOperatorError(StatdiscError, ArithmeticError):
    """A linear operator is singular or too ill conditioned to invert."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class RegimeError(StatdiscError, ArithmeticError):
    """A quantity left the contraction regime (e.g. ``||X|| >= 1``)."""


class IterationLimitError(StatdiscError, ArithmeticError):
    """An iteration hit its cap before converging."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepTooLargeError(StatdiscError, ValueError):
    """A finite-difference stencil leaves the admissible parameter region."""


class GenerationError(StatdiscError, RuntimeError):
    """A random instance of the requested class could not be produced."""
