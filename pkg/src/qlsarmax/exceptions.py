"""Exception hierarchy shared by every module of the package."""


class QlsError(Exception):
    """Base class for all package errors."""


class ParameterError(QlsError, ValueError):
    """A parameter lies outside its admissible domain."""


class ShapeError(QlsError, ValueError):
    """Array dimensions do not match the model specification."""


class InputError(QlsError, ValueError):
    """Malformed user input (files, configuration, data values)."""


class NumericError(QlsError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value.

    Parameters
    ----------
    message : str
    t : int, optional
        One-based time index where the failure was first detected.
    diagnostics : dict, optional
        Free-form details (quadrature error estimates, brackets, ...).
    """

    def __init__(self, message, t=None, diagnostics=None):
        super().__init__(message if t is None else f"{message} (t={t})")
        self.t = t
        self.diagnostics = diagnostics or {}


class StationarityError(NumericError):
    """AR polynomial has a root on or inside the unit circle."""


class CollinearityError(InputError):
    """Design matrix is rank deficient."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class SingularInformationError(NumericError):
    """Observed information matrix is not positive definite."""


class ConvergenceError(NumericError):
    """No optimizer start reached a usable maximum."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class MetricError(NumericError):
    """A forecast metric has a zero scaling denominator."""
