import math
from dataclasses import replace

import numpy as np
import pytest

from qlsarmax import (
    DesignData,
    FitConfig,
    ForecastRequest,
    InputError,
    LikelihoodContext,
    MetricError,
    ModelSpec,
    ParamVector,
    ParameterError,
    fit,
    forecast,
    forecast_metrics,
    run_recursion,
)
from qlsarmax.forecasting import forecast_path
from qlsarmax.simulation import REFERENCE_TRUTH, simulate_series


def base_fit(spec, data):
    return fit(LikelihoodContext(spec, data), FitConfig(multistart=1))


def with_params(res, data, pv):
    st = run_recursion(res.spec, data, pv)
    return replace(res, params=pv, innovations=st.innov, fitted_Q=st.Q)


@pytest.fixture(scope="module")
def sim():
    rng = np.random.default_rng(0)
    n = 151
    spec = ModelSpec(1, 1, 1, 1, 0.5, "normal")
    X = np.column_stack([np.ones(n), rng.random(n)])
    W = np.column_stack([np.ones(n), rng.random(n)])
    y = simulate_series(spec, REFERENCE_TRUTH, X, W, rng)
    return spec, y, X, W


def test_pure_regression_projection():
    rng = np.random.default_rng(1)
    x = rng.random(40)
    data = DesignData.from_arrays(np.exp(1 + 0.5 * x + rng.normal(0, 0.1, 40)), x)
    spec = ModelSpec(0, 0, 1, 0)
    res = base_fit(spec, data)
    fx = np.column_stack([np.ones(3), [0.1, 0.5, 0.9]])
    out = forecast(res, spec, data, ForecastRequest(3, fx)).point
    assert np.allclose(out, np.exp(fx @ res.params.beta), rtol=1e-15)


def test_hand_case():
    spec = ModelSpec(1, 1, 0, 0)
    data = DesignData.from_arrays(np.exp([1.1, 1.4]))
    res = base_fit(ModelSpec(0, 0, 0, 0), DesignData.from_arrays(np.exp([1.0, 1.2, 0.9, 1.4])))
    res = replace(res, spec=spec, params=ParamVector([1.0], [0.0], [0.5], [0.2]),
                  innovations=np.array([0.0, 0.3]))
    path = forecast_path(res, data, np.ones((2, 1)))
    assert np.log(path[0]) == pytest.approx(1.26, abs=1e-14)
    assert np.log(path[1]) == pytest.approx(1.13, abs=1e-14)


def test_one_step_equals_in_sample_recursion(sim):
    spec, y, X, W = sim
    n = 150
    data = DesignData(y[:n], X[:n], W[:n])
    res = base_fit(spec, data)
    ahead = forecast_path(res, data, X[n:n + 1])[0]
    full = run_recursion(spec, DesignData(y, X, W), res.params)
    assert ahead == pytest.approx(full.Q[n], rel=1e-13)


def test_no_dynamics_ignores_history(sim):
    spec, y, X, W = sim
    data = DesignData(y[:100], X[:100], W[:100])
    res = base_fit(spec, data)
    pv = ParamVector(res.params.beta, res.params.tau_coefs, [0.0], [0.0])
    a = forecast_path(with_params(res, data, pv), data, X[100:104])
    data2 = DesignData(y[:100][::-1].copy(), X[:100], W[:100])
    b = forecast_path(with_params(res, data2, pv), data2, X[100:104])
    assert np.array_equal(a, b)


def test_interval_band(sim):
    spec, y, X, W = sim
    data = DesignData(y[:150], X[:150], W[:150])
    res = base_fit(spec, data)
    req = ForecastRequest(1, X[150:151], W[150:151], (0.025, 0.975))
    out = forecast(res, spec, data, req)
    assert out.lower[0] < out.point[0] < out.upper[0]
    assert out.order_violations == 0 and out.basis_tau == 0.5


def test_request_validation(sim):
    spec, y, X, W = sim
    with pytest.raises(InputError):
        ForecastRequest(3, X[:2])
    with pytest.raises(ParameterError):
        ForecastRequest(1, X[:1], interval_levels=(0.9, 0.1))
    with pytest.raises(ParameterError):
        ForecastRequest(0, X[:0])
    data = DesignData(y[:100], X[:100], W[:100])
    res = base_fit(spec, data)
    with pytest.raises(InputError):
        forecast(res, spec, data, ForecastRequest(1, np.ones((1, 3))))
    with pytest.raises(ParameterError):
        forecast(res, spec.with_tau(0.3), data, ForecastRequest(1, X[:1]))


def test_metrics_examples():
    m = forecast_metrics([2.0, 4.0], [1.0, 5.0])
    assert m["RMSE"] == 1.0 and m["MAE"] == 1.0
    assert math.isnan(m["MASE"]) and math.isnan(m["MSIS"])
    perfect = forecast_metrics([1.0, 3.0], [1.0, 3.0], insample=[1.0, 2.0])
    assert perfect["RMSE"] == perfect["MAE"] == perfect["SMAPE"] == 0.0


def test_naive_forecast_mase_is_one():
    a = np.random.default_rng(2).gamma(2.0, size=50)
    m = forecast_metrics(a[1:], a[:-1], insample=a)
    assert m["MASE"] == pytest.approx(1.0, rel=1e-14)


def test_msis_by_hand():
    a, lo, hi = np.array([1.0, 5.0]), np.array([0.5, 1.0]), np.array([2.0, 3.0])
    m = forecast_metrics(a, a, lo, hi, insample=[0.0, 2.0], alpha=0.05)
    expect = ((1.5) + (2.0 + 40.0 * 2.0)) / 2 / 2.0
    assert m["MSIS"] == pytest.approx(expect, rel=1e-15)
    assert m["SMAPE"] == 0.0


def test_metric_errors():
    with pytest.raises(MetricError):
        forecast_metrics([1.0], [1.0], insample=[3.0, 3.0, 3.0])
    with pytest.raises(ParameterError):
        forecast_metrics([1.0, 2.0], [1.0])
