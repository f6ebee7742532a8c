"""Exception hierarchy.

Every error derives from ``ValueError`` (or ``ArithmeticError`` for numerical
breakdowns) so callers that only know the builtin types still catch them.
"""


class FofrError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FofrError, ValueError):
    pass


class IncompatibleGridError(FofrError, ValueError):
    """Two curves or operators are not defined on the same grid."""


class DegenerateInputError(FofrError, ValueError):
    """Input curves are (numerically) linearly dependent.

    ``index`` is the 1-based position of the first offending curve.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class TruncationTooLargeError(FofrError, ValueError):
    """Requested truncation exceeds the numerical rank of the regressors."""


class NumericalFailureError(FofrError, ArithmeticError):
    pass
