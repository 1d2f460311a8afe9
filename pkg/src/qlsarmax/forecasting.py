"""Multi-step quantile forecasts and forecast accuracy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arma import DesignData, ModelSpec
from .estimation import FitConfig, FitResult, warm_start, fit
from .exceptions import InputError, MetricError, ParameterError
from .likelihood import LikelihoodContext

__all__ = ["ForecastRequest", "ForecastResult", "forecast", "forecast_path", "forecast_metrics"]


@dataclass(frozen=True)
class ForecastRequest:
    """Forecast horizon, future designs (with intercept columns) and band levels."""

    horizon: int
    future_X: np.ndarray
    future_W: np.ndarray | None = None
    interval_levels: tuple[float, float] | None = None

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterError("horizon must be a positive integer")
        fx = np.atleast_2d(np.asarray(self.future_X, dtype=float))
        if fx.shape[0] != self.horizon:
            raise InputError(f"future_X has {fx.shape[0]} rows for horizon {self.horizon}")
        object.__setattr__(self, "future_X", fx)
        if self.future_W is not None:
            fw = np.atleast_2d(np.asarray(self.future_W, dtype=float))
            if fw.shape[0] != self.horizon:
                raise InputError(f"future_W has {fw.shape[0]} rows for horizon {self.horizon}")
            object.__setattr__(self, "future_W", fw)
        if self.interval_levels is not None:
            lo, hi = (float(v) for v in self.interval_levels)
            if not 0.0 < lo < hi < 1.0:
                raise ParameterError("interval levels must satisfy 0 < lo < hi < 1")
            object.__setattr__(self, "interval_levels", (lo, hi))


@dataclass
class ForecastResult:
    point: np.ndarray
    lower: np.ndarray | None
    upper: np.ndarray | None
    basis_tau: float
    interval_levels: tuple[float, float] | None = None
    order_violations: int = 0


def forecast_path(fit_res: FitResult, data: DesignData, future_X) -> np.ndarray:
    """Forecast ``Q_{n+1..n+h}`` from one fitted model.

    Future innovations are zero and lagged responses beyond the sample are
    replaced by their forecasts.
    """
    spec = fit_res.spec
    pv = fit_res.params
    future_X = np.atleast_2d(np.asarray(future_X, dtype=float))
    if future_X.shape[1] != spec.k + 1:
        raise InputError(f"future_X needs {spec.k + 1} columns, got {future_X.shape[1]}")
    n, h = data.n, future_X.shape[0]
    link = spec.mean_link
    hy = np.concatenate([link.link(data.y), np.zeros(h)])
    # row-wise sums, so a step's value does not depend on the horizon
    xb = np.concatenate([(data.X * pv.beta).sum(axis=1), (future_X * pv.beta).sum(axis=1)])
    r = np.concatenate([fit_res.innovations, np.zeros(h)])
    for s in range(h):
        t = n + s
        eta = xb[t]
        for i in range(spec.p):
            eta += pv.phi[i] * (hy[t - 1 - i] - xb[t - 1 - i])
        for j in range(spec.q):
            eta += pv.theta[j] * r[t - 1 - j]
        hy[t] = eta
    return link.inverse(hy[n:])


def forecast(fit_res: FitResult, spec: ModelSpec, data: DesignData, req: ForecastRequest,
             interval_fits: tuple[FitResult, FitResult] | None = None,
             config: FitConfig | None = None, kernel=None) -> ForecastResult:
    """Point forecast at the fitted level plus an optional quantile band.

    The band comes from models fitted at ``req.interval_levels``; pass them
    as ``interval_fits`` or let this function fit them (warm-started from
    ``fit_res``).
    """
    if fit_res.spec != spec:
        raise ParameterError("fit was produced for a different model specification")
    if req.future_W is not None and req.future_W.shape[1] != spec.l + 1:
        raise InputError(f"future_W needs {spec.l + 1} columns, got {req.future_W.shape[1]}")
    point = forecast_path(fit_res, data, req.future_X)
    lower = upper = None
    violations = 0
    if req.interval_levels is not None:
        if interval_fits is None:
            ctx = LikelihoodContext(spec, data, kernel)
            fits = []
            for level in req.interval_levels:
                start = warm_start(fit_res.params, ctx.kernel, spec.tau_level, level)
                fits.append(fit(ctx.with_tau(level), config, start))
            interval_fits = (fits[0], fits[1])
        lo_fit, hi_fit = interval_fits
        if (lo_fit.tau_level, hi_fit.tau_level) != req.interval_levels:
            raise ParameterError("interval fits do not match the requested levels")
        lower = forecast_path(lo_fit, data, req.future_X)
        upper = forecast_path(hi_fit, data, req.future_X)
        violations = int(np.sum((lower > point) | (point > upper)))
    return ForecastResult(point, lower, upper, spec.tau_level, req.interval_levels, violations)


def forecast_metrics(actual, point, lower=None, upper=None, insample=None, alpha: float = 0.05) -> dict:
    """RMSE, MAE, MASE, SMAPE and MSIS.

    MASE and MSIS are scaled by the mean absolute first difference of
    ``insample``.  MSIS needs both bounds and is NaN otherwise.

    Raises
    ------
    MetricError
        If the in-sample scaling denominator is zero.
    """
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(point, dtype=float).reshape(-1)
    if a.shape != p.shape or a.size == 0:
        raise ParameterError("actual and point must be nonempty and of equal length")
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    err = a - p
    out = {"RMSE": math.sqrt(float(np.mean(err * err))), "MAE": float(np.mean(np.abs(err)))}
    denom = np.abs(a) + np.abs(p)
    with np.errstate(invalid="ignore", divide="ignore"):
        sm = np.where(denom > 0, 200.0 * np.abs(err) / denom, 0.0)
    out["SMAPE"] = float(np.mean(sm))
    scale = math.nan
    if insample is not None:
        ins = np.asarray(insample, dtype=float).reshape(-1)
        if ins.size < 2:
            raise MetricError("in-sample series needs at least two values for scaling")
        scale = float(np.mean(np.abs(np.diff(ins))))
        if scale == 0.0:
            raise MetricError("in-sample series is constant; scaled metrics undefined")
    out["MASE"] = out["MAE"] / scale if insample is not None else math.nan
    if lower is not None and upper is not None and insample is not None:
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if lo.shape != a.shape or hi.shape != a.shape:
            raise ParameterError("bounds must match actual in length")
        score = (hi - lo) + 2.0 / alpha * np.maximum(lo - a, 0.0) + 2.0 / alpha * np.maximum(a - hi, 0.0)
        out["MSIS"] = float(np.mean(score)) / scale
    else:
        out["MSIS"] = math.nan
    return {k: out[k] for k in ("RMSE", "MAE", "MASE", "SMAPE", "MSIS")}
