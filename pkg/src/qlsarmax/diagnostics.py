"""Residuals and goodness-of-fit summaries.

Two residuals are provided for a fitted model:

* generalized Cox-Snell, ``-log S(y_t)``, standard exponential under a
  correctly specified model;
* quantile residuals, ``Phi^{-1}(F(y_t))``, standard normal under a correctly
  specified model.  The response is continuous, so no randomization is
  needed.

Fitted survival probabilities are clamped to ``[1e-15, 1 - 1e-15]`` before
the transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special, stats

from .estimation import FitResult
from .exceptions import NumericError, ParameterError
from .likelihood import LikelihoodContext

__all__ = [
    "ResidualReport",
    "EnvelopeTarget",
    "QQEnvelope",
    "residuals",
    "acf_pacf",
    "qq_envelope",
    "describe",
    "fraction_below",
]

CLAMP = 1e-15


def describe(series) -> dict:
    """Descriptive statistics of a sample.

    Returns ``MN`` (mean), ``MD`` (median), ``SD`` (sample standard
    deviation, ``ddof=1``), ``CS`` (bias-adjusted skewness), ``CK``
    (bias-adjusted excess kurtosis), ``min``, ``max``, ``CV`` (``100 SD/MN``)
    and ``n``.  Statistics that are undefined for the sample (constant
    series, too few points) are NaN.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    n = x.size
    if n < 2:
        raise ParameterError("describe needs at least two observations")
    mn = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    const = bool(np.all(x == x[0]))
    if const:
        sd = 0.0
    cs = ck = math.nan
    if not const:
        if n >= 3:
            cs = float(stats.skew(x, bias=False))
        if n >= 4:
            ck = float(stats.kurtosis(x, fisher=True, bias=False))
    return {
        "MN": mn,
        "MD": float(np.median(x)),
        "SD": sd,
        "CS": cs,
        "CK": ck,
        "min": float(np.min(x)),
        "max": float(np.max(x)),
        "CV": 100.0 * sd / mn if mn != 0 else math.nan,
        "n": n,
    }


def acf_pacf(series, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample autocorrelations (``1/n`` normalization) and partial autocorrelations.

    Both arrays have length ``max_lag + 1`` and start with 1 at lag 0.  The
    partial autocorrelations come from the Durbin-Levinson recursion.

    Raises
    ------
    NumericError
        For a constant series.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    n = x.size
    if not 0 <= max_lag < n:
        raise ParameterError("max_lag must satisfy 0 <= max_lag < len(series)")
    d = x - x.mean()
    c0 = float(d @ d) / n
    if c0 == 0.0:
        raise NumericError("autocorrelation undefined for a constant series")
    acf = np.array([float(d[k:] @ d[: n - k]) / n for k in range(max_lag + 1)]) / c0
    acf[0] = 1.0
    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        a = (acf[k] - float(phi @ acf[1:k][::-1])) / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        pacf[k] = a
    return acf, pacf


class EnvelopeTarget(str, Enum):
    STD_NORMAL = "std_normal"
    STD_EXPONENTIAL = "std_exponential"


_TARGETS = {
    EnvelopeTarget.STD_NORMAL: stats.norm,
    EnvelopeTarget.STD_EXPONENTIAL: stats.expon,
}


@dataclass(frozen=True)
class QQEnvelope:
    """Plot-ready QQ data: theoretical quantiles, sorted residuals and the band."""

    theoretical: np.ndarray
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    median: np.ndarray
    target: EnvelopeTarget
    level: float

    def inside_fraction(self) -> float:
        return float(np.mean((self.observed >= self.lower) & (self.observed <= self.upper)))

    def columns(self) -> dict:
        return {"theoretical": self.theoretical, "observed": self.observed,
                "lower": self.lower, "median": self.median, "upper": self.upper}


def qq_envelope(resid, target: EnvelopeTarget | str = EnvelopeTarget.STD_NORMAL,
                n_sim: int = 199, rng: np.random.Generator | None = None,
                level: float = 0.95) -> QQEnvelope:
    """Simulated pointwise envelope for a QQ plot.

    ``n_sim`` samples of the residual length are drawn from the target; the
    band at each rank is formed by the order statistics of rank
    ``max(1, ceil(alpha/2 (n_sim + 1)) - 1)`` from each end, a slightly
    conservative choice for the nominal ``level``.
    """
    target = EnvelopeTarget(target)
    if n_sim < 19:
        raise ParameterError("n_sim must be at least 19")
    if not 0 < level < 1:
        raise ParameterError("level must lie in (0, 1)")
    rng = rng if rng is not None else np.random.default_rng(0)
    r = np.sort(np.asarray(resid, dtype=float).reshape(-1))
    n = r.size
    law = _TARGETS[target]
    theo = law.ppf((np.arange(1, n + 1) - 0.5) / n)
    sims = np.sort(law.rvs(size=(n_sim, n), random_state=rng), axis=1)
    sims.sort(axis=0)
    alpha = 1.0 - level
    # rounding keeps 1 - 0.95 from pushing ceil up by one rank
    k = max(1, math.ceil(round(alpha / 2.0 * (n_sim + 1), 9)) - 1)
    return QQEnvelope(theo, r, sims[k - 1], sims[n_sim - k], np.median(sims, axis=0), target, level)


@dataclass
class ResidualReport:
    gcs: np.ndarray
    rq: np.ndarray
    stats_gcs: dict
    stats_rq: dict
    acf: np.ndarray
    pacf: np.ndarray
    envelope: QQEnvelope | None
    envelope_gcs: QQEnvelope | None
    n_clamped: int


def _fitted_probabilities(fit: FitResult, ctx: LikelihoodContext):
    m = fit.spec.m
    y = ctx.data.y[m:]
    sk = np.sqrt(fit.fitted_kappa[m:])
    z = np.log(y / fit.fitted_Q[m:]) / sk + ctx.z_tau
    return ctx.kernel.cdf(z), ctx.kernel.sf(z)


def residuals(fit: FitResult, ctx: LikelihoodContext, max_lag: int = 20,
              envelope: bool = False, n_sim: int = 199,
              rng: np.random.Generator | None = None) -> ResidualReport:
    """Cox-Snell and quantile residuals with their summaries.

    ``acf``/``pacf`` are those of the quantile residuals.  Envelopes are
    computed only when ``envelope=True``.
    """
    if fit.spec != ctx.spec:
        raise ParameterError("fit and context have different model specifications")
    F, S = _fitted_probabilities(fit, ctx)
    n_clamped = int(np.sum((S < CLAMP) | (S > 1.0 - CLAMP)))
    S = np.clip(S, CLAMP, 1.0 - CLAMP)
    F = np.clip(F, CLAMP, 1.0 - CLAMP)
    gcs = -np.log(S)
    # lower tail from F, upper tail from S for full precision
    rq = np.where(F < 0.5, special.ndtri(F), -special.ndtri(S))
    lag = min(max_lag, rq.size - 1)
    try:
        acf, pacf = acf_pacf(rq, lag)
    except NumericError:
        acf = pacf = np.full(lag + 1, np.nan)
    env = env_gcs = None
    if envelope:
        rng = rng if rng is not None else np.random.default_rng(0)
        env = qq_envelope(rq, EnvelopeTarget.STD_NORMAL, n_sim, rng)
        env_gcs = qq_envelope(gcs, EnvelopeTarget.STD_EXPONENTIAL, n_sim, rng)
    return ResidualReport(gcs, rq, describe(gcs), describe(rq), acf, pacf, env, env_gcs, n_clamped)


def fraction_below(fit: FitResult, ctx: LikelihoodContext) -> float:
    """Share of observations below their fitted conditional quantile."""
    m = fit.spec.m
    return float(np.mean(ctx.data.y[m:] < fit.fitted_Q[m:]))
