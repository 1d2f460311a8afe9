"""Quantile ARMAX models with log-symmetric conditional laws.

Fitting, simulation, forecasting and residual diagnostics for the
QLS-ARMAX model: the conditional ``tau``-quantile of a positive series follows
an ARMA recursion on the log scale, the dispersion a log-linear regression,
and the conditional law is one of eight log-symmetric families.
"""

__version__ = "0.1.0"

from .arma import (
    DesignData,
    LogLink,
    ModelSpec,
    ParamVector,
    RecursionState,
    arma_autocorrelation,
    check_stationarity,
    psi_weights,
    run_recursion,
)
from .diagnostics import acf_pacf, describe, qq_envelope, residuals
from .distribution import QlsDistribution
from .estimation import (
    FitConfig,
    FitResult,
    fit,
    fit_profile,
    information_criteria,
    initialize,
    kernel_grid,
)
from .exceptions import (
    CollinearityError,
    ConvergenceError,
    InputError,
    MetricError,
    NumericError,
    ParameterError,
    QlsError,
    ShapeError,
    SingularInformationError,
    StationarityError,
)
from .forecasting import ForecastRequest, ForecastResult, forecast, forecast_metrics
from .kernels import KernelFamily, KernelKind, StandardKernel, normalization_constant
from .likelihood import HessianMode, LikelihoodContext, hessian, loglik, observed_info_se, score
from .simulation import McDesign, McReport, run_mc, simulate_series

__all__ = [
    "CollinearityError", "ConvergenceError", "DesignData", "FitConfig", "FitResult",
    "ForecastRequest", "ForecastResult", "HessianMode", "InputError", "KernelFamily",
    "KernelKind", "LikelihoodContext", "LogLink", "McDesign", "McReport", "MetricError",
    "ModelSpec", "NumericError", "ParamVector", "ParameterError", "QlsDistribution", "QlsError",
    "RecursionState", "ShapeError", "SingularInformationError", "StandardKernel",
    "StationarityError", "acf_pacf", "arma_autocorrelation", "check_stationarity", "describe",
    "fit", "fit_profile", "forecast", "forecast_metrics", "hessian", "information_criteria",
    "initialize", "kernel_grid", "loglik", "normalization_constant", "observed_info_se",
    "psi_weights", "qq_envelope", "residuals", "run_mc", "run_recursion", "score",
    "simulate_series",
]
