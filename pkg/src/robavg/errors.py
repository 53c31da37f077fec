"""Exception hierarchy shared by all robavg modules."""

from __future__ import annotations


class RobAvgError(Exception):
    """Base class for every error raised by robavg."""


class DegenerateBandwidth(RobAvgError, ValueError):
    """Semi-interquartile range of the residuals is zero."""


class EmptyAcceptRegion(RobAvgError, ValueError):
    """No residual falls inside the Huber threshold."""


class ZeroCurvature(RobAvgError, ArithmeticError):
    """Averaged curvature proxy is not positive."""

    def __init__(self, message: str, model_id: int | None = None):
        super().__init__(message)
        self.model_id = model_id


class TooManyColumns(RobAvgError, ValueError):
    """Subset enumeration would exceed the combinatorial guard."""


class RankDeficient(RobAvgError, ValueError):
    """Candidate design submatrix is not of full column rank."""

    def __init__(self, message: str, model_id: int | None = None):
        super().__init__(message)
        self.model_id = model_id


class NoConvergence(RobAvgError, RuntimeError):
    """Iterative solver hit its iteration cap.

    ``best`` holds the last (best) iterate so the caller can decide.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class NonFiniteObjective(RobAvgError, FloatingPointError):
    """Criterion returned a non-finite value at a feasible point."""


class SingularNormalizer(RobAvgError, ArithmeticError):
    """Estimated normalizing matrix of the robust Cp is singular."""


class LengthMismatch(RobAvgError, ValueError):
    """Two vectors that must align have different lengths."""


class ParseError(RobAvgError, ValueError):
    """Malformed CSV input."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonNumericCell(ParseError):
    """A CSV cell could not be parsed as a finite number."""


class MissingColumn(ParseError):
    """A requested CSV column is absent from the header."""


class ModelFitError(RobAvgError, RuntimeError):
    """A per-model or per-fold failure, annotated with where it happened."""

    def __init__(self, message: str, model_id: int | None = None, fold: int | None = None):
        super().__init__(message)
        self.model_id = model_id
        self.fold = fold
