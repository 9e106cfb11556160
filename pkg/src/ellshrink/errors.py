"""Exception types shared across the package."""


class EllShrinkError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(EllShrinkError):
    """Input has the wrong shape (non-square matrix, ragged data, ...)."""


class ParameterError(EllShrinkError):
    """A parameter is outside its valid range or a coefficient is singular."""


class InsufficientSamplesError(EllShrinkError):
    """Too few observations for the requested estimator."""


class DegenerateDataError(EllShrinkError):
    """Data carries no usable variation (zero-variance column, zero-trace
    matrix, all samples coincident with the center, ...)."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class SingularMatrixError(EllShrinkError):
    """Symmetric factorization failed; ``pivot_index`` names the failing pivot."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class ConvergenceError(EllShrinkError):
    """Iteration cap reached before the tolerance was met.

    Carries the last iterate and the residual it achieved.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class ExperimentError(EllShrinkError):
    """A Monte Carlo experiment or backtest could not be completed."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CsvFormatError(EllShrinkError):
    """Malformed input file; ``line`` and ``column`` are 1-based positions."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ClampWarning(UserWarning):
    """A value was clamped back into its contractual range."""
