import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import special, stats
from statsmodels.tsa.stattools import pacf as sm_pacf

from qlsarmax import (
    DesignData,
    FitConfig,
    LikelihoodContext,
    ModelSpec,
    NumericError,
    ParameterError,
    acf_pacf,
    describe,
    fit,
    qq_envelope,
    residuals,
)
from qlsarmax.diagnostics import EnvelopeTarget, fraction_below
from qlsarmax.simulation import REFERENCE_TRUTH, simulate_series

from helpers import KERNEL_IDS, KERNELS, kernel


def fitted_sim(fam, tau, n, seed):
    rng = np.random.default_rng(seed)
    spec = ModelSpec(1, 1, 1, 1, tau, fam)
    X = np.column_stack([np.ones(n), rng.random(n)])
    W = np.column_stack([np.ones(n), rng.random(n)])
    y = simulate_series(spec, REFERENCE_TRUTH, X, W, rng, kernel=kernel(fam))
    ctx = LikelihoodContext(spec, DesignData(y, X, W), kernel(fam))
    return fit(ctx, FitConfig(multistart=1)), ctx


def test_residuals_at_median():
    res, ctx = fitted_sim(KERNELS[1], 0.5, 100, 0)
    at_median = replace(res, fitted_Q=ctx.data.y.copy())
    rep = residuals(at_median, ctx)
    assert np.allclose(rep.gcs, math.log(2.0), rtol=0, atol=1e-15)
    assert np.allclose(rep.rq, 0.0, atol=1e-15)
    assert round(float(rep.gcs[0]), 6) == 0.693147


@pytest.mark.parametrize("fam", KERNELS, ids=KERNEL_IDS)
def test_gcs_rq_link(fam):
    res, ctx = fitted_sim(fam, 0.25, 150, 1)
    rep = residuals(res, ctx)
    # the survival-based form stays accurate in the upper tail
    via_gcs = -special.ndtri(np.exp(-rep.gcs))
    assert np.allclose(rep.rq, via_gcs, rtol=0, atol=1e-10)
    assert rep.gcs.size == rep.rq.size == ctx.data.n - ctx.spec.m
    assert rep.stats_rq == describe(rep.rq) and rep.stats_gcs == describe(rep.gcs)
    assert rep.n_clamped == 0


@pytest.mark.parametrize("fam,tau", list(zip(KERNELS, [0.25, 0.5, 0.75, 0.1, 0.9, 0.3, 0.6, 0.8])),
                         ids=KERNEL_IDS)
def test_fraction_below_fitted_quantile(fam, tau):
    res, ctx = fitted_sim(fam, tau, 1500, 2)
    assert res.converged
    frac = fraction_below(res, ctx)
    assert abs(frac - tau) < 3 / math.sqrt(ctx.n_used)


def test_describe_examples():
    d = describe([1, 2, 3, 4, 5])
    assert d["MN"] == 3 and d["MD"] == 3
    assert d["SD"] == pytest.approx(1.581139, abs=5e-7)
    assert d["CV"] == pytest.approx(100 * d["SD"] / 3)
    assert d["n"] == 5 and d["min"] == 1 and d["max"] == 5
    c = describe([2.0, 2.0, 2.0])
    assert c["SD"] == 0.0 and math.isnan(c["CS"]) and math.isnan(c["CK"])
    with pytest.raises(ParameterError):
        describe([1.0])


def test_describe_bias_adjusted_moments():
    x = np.random.default_rng(3).gamma(2.0, size=80)
    d = describe(x)
    n = x.size
    g1 = stats.skew(x)
    g2 = stats.kurtosis(x)
    assert d["CS"] == pytest.approx(g1 * math.sqrt(n * (n - 1)) / (n - 2), rel=1e-12)
    assert d["CK"] == pytest.approx(((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3)), rel=1e-12)
    perm = np.random.default_rng(4).permutation(x)
    dp = describe(perm)
    assert all(dp[k] == pytest.approx(d[k], rel=1e-12) for k in d)


def test_acf_white_noise():
    rng = np.random.default_rng(5)
    n = 10_000
    hits = 0
    for _ in range(20):
        acf, _ = acf_pacf(rng.normal(size=n), 20)
        assert acf[0] == 1.0
        hits += np.sum(np.abs(acf[1:]) < 3 / math.sqrt(n))
    assert hits / 400 >= 0.95


def test_acf_ar1():
    rng = np.random.default_rng(6)
    n = 50_000
    e = rng.normal(size=n)
    x = np.empty(n)
    x[0] = e[0]
    for t in range(1, n):
        x[t] = 0.6 * x[t - 1] + e[t]
    acf, pacf = acf_pacf(x, 8)
    assert np.allclose(acf, 0.6 ** np.arange(9), atol=0.03)
    assert abs(pacf[1] - 0.6) < 0.03 and np.all(np.abs(pacf[2:]) < 0.03)


def test_pacf_matches_statsmodels():
    x = np.random.default_rng(7).normal(size=300).cumsum() * 0.1 + np.random.default_rng(8).normal(size=300)
    _, ours = acf_pacf(x, 15)
    ref = sm_pacf(x, nlags=15, method="ldb")
    assert np.allclose(ours, ref, atol=1e-12)


def test_acf_errors():
    with pytest.raises(NumericError):
        acf_pacf(np.ones(10), 3)
    with pytest.raises(ParameterError):
        acf_pacf(np.arange(5.0), 5)


def test_envelope_coverage():
    rng = np.random.default_rng(9)
    inside = [qq_envelope(rng.normal(size=100), "std_normal", 199, rng).inside_fraction() for _ in range(200)]
    assert np.mean(inside) >= 0.95
    inside = [qq_envelope(rng.exponential(size=100), EnvelopeTarget.STD_EXPONENTIAL, 199, rng).inside_fraction()
              for _ in range(200)]
    assert np.mean(inside) >= 0.95


def test_envelope_shifted_residuals_fall_outside():
    rng = np.random.default_rng(10)
    env = qq_envelope(rng.normal(size=100) + 2, "std_normal", 199, rng)
    assert env.inside_fraction() < 0.5


def test_envelope_deterministic_and_ordered():
    r = np.random.default_rng(11).normal(size=60)
    a = qq_envelope(r, rng=np.random.default_rng(1))
    b = qq_envelope(r, rng=np.random.default_rng(1))
    for k in a.columns():
        assert np.array_equal(a.columns()[k], b.columns()[k])
    assert np.all(a.lower <= a.median) and np.all(a.median <= a.upper)
    assert np.all(np.diff(a.theoretical) > 0) and np.all(np.diff(a.observed) >= 0)
    with pytest.raises(ParameterError):
        qq_envelope(r, n_sim=10)


def test_residual_report_envelopes():
    res, ctx = fitted_sim(KERNELS[0], 0.5, 120, 12)
    rep = residuals(res, ctx, max_lag=5, envelope=True, n_sim=39, rng=np.random.default_rng(0))
    assert rep.envelope.observed.size == rep.rq.size
    assert rep.envelope_gcs.target == EnvelopeTarget.STD_EXPONENTIAL
    assert rep.acf.size == 6
