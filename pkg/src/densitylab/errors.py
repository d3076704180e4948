"""Exception hierarchy shared by every module."""


class DensityLabError(Exception):
    pass


class InsufficientKnowledgeError(DensityLabError, ValueError):
    """A query reached past the bound of a finite prefix."""


class UndefinedRatioError(DensityLabError, ZeroDivisionError):
    pass


class BudgetExceeded(DensityLabError):
    """A bounded search gave up. This is never a wrong answer, only no answer."""

    def __init__(self, message, consumed=None):
        super().__init__(message)
        self.consumed = consumed


class ContradictionError(DensityLabError):
    """Two sources claimed opposite answers for the same point."""


class NotAFunctionError(DensityLabError, ValueError):
    pass


class FormatError(DensityLabError, ValueError):
    pass


class InvariantViolation(DensityLabError):
    """A construction broke one of its own stage invariants."""
