import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.tsa.arima_process import arma_acf

from qlsarmax import (
    DesignData,
    KernelFamily,
    ModelSpec,
    NumericError,
    ParamVector,
    ParameterError,
    ShapeError,
    StationarityError,
    arma_autocorrelation,
    check_stationarity,
    psi_weights,
    run_recursion,
)
from qlsarmax.arma import LogLink, get_link


def loop_recursion(spec, data, pv):
    """Plain forward loop used as an independent oracle."""
    n, m = data.n, spec.m
    hy = np.log(data.y)
    xb = data.X @ pv.beta
    eta = np.full(n, np.nan)
    r = np.zeros(n)
    for t in range(m, n):
        e = xb[t]
        for i in range(1, spec.p + 1):
            e += pv.phi[i - 1] * (hy[t - i] - xb[t - i])
        for j in range(1, spec.q + 1):
            e += pv.theta[j - 1] * r[t - j]
        eta[t] = e
        r[t] = hy[t] - e
    return eta, r


def long_division(phi, theta, horizon):
    """Coefficients of Theta(B)/Phi(B) by dividing power series term by term."""
    num = np.zeros(horizon + 1)
    num[0] = 1.0
    num[1: len(theta) + 1] = theta[: horizon]
    den = np.zeros(horizon + 1)
    den[0] = 1.0
    den[1: len(phi) + 1] = -np.asarray(phi)[: horizon]
    out = np.zeros(horizon + 1)
    rem = num.copy()
    for j in range(horizon + 1):
        out[j] = rem[j] / den[0]
        rem[j:] -= out[j] * den[: horizon + 1 - j]
    return out


# --- recursion -----------------------------------------------------------------------

def test_pure_regression():
    spec = ModelSpec(0, 0, 1, 0)
    data = DesignData.from_arrays([1.0, 2.0], [0.5, 0.1])
    st_ = run_recursion(spec, data, ParamVector([1.0, 0.7], [0.0]))
    assert st_.eta[0] == pytest.approx(1.35, abs=1e-15)


def test_hand_recursion_arma11():
    spec = ModelSpec(1, 1)
    data = DesignData.from_arrays([math.e, math.e ** 2])
    st_ = run_recursion(spec, data, ParamVector([1.0], [0.0], [0.6], [0.3]))
    assert np.isnan(st_.eta[0]) and st_.innov[0] == 0.0
    assert st_.eta[1] == pytest.approx(1.0, abs=1e-15)
    assert st_.innov[1] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (0, 2), (3, 2), (2, 0)])
def test_matches_loop_oracle(p, q):
    rng = np.random.default_rng(p * 10 + q)
    n = 80
    data = DesignData.from_arrays(np.exp(rng.normal(0, 1, n)), rng.random((n, 2)), rng.random(n))
    spec = ModelSpec(p, q, 2, 1)
    pv = ParamVector(rng.normal(size=3), rng.normal(size=2), rng.uniform(-.4, .4, p), rng.uniform(-.4, .4, q))
    st_ = run_recursion(spec, data, pv)
    eta, r = loop_recursion(spec, data, pv)
    m = spec.m
    assert np.allclose(st_.eta[m:], eta[m:], rtol=0, atol=1e-12)
    assert np.allclose(st_.innov, r, rtol=0, atol=1e-12)
    assert np.all(st_.innov[:m] == 0)
    # innovation identity on the link scale
    assert np.allclose(st_.innov[m:], np.log(data.y[m:]) - st_.eta[m:], rtol=0, atol=1e-12)
    assert np.allclose(st_.Q[m:], np.exp(st_.eta[m:]), rtol=1e-15)
    assert np.allclose(st_.kappa, np.exp(data.W @ pv.tau_coefs), rtol=1e-15)


def test_regression_limit():
    rng = np.random.default_rng(1)
    data = DesignData.from_arrays(np.exp(rng.normal(size=30)), rng.random(30))
    spec = ModelSpec(2, 2, 1, 0)
    st_ = run_recursion(spec, data, ParamVector([0.3, 1.2], [0.0], [0, 0], [0, 0]))
    assert np.allclose(st_.eta[2:], (data.X @ [0.3, 1.2])[2:], rtol=0, atol=1e-15)


def test_idempotent():
    rng = np.random.default_rng(2)
    data = DesignData.from_arrays(np.exp(rng.normal(size=30)))
    spec = ModelSpec(1, 1)
    pv = ParamVector([0.1], [0.0], [0.5], [0.2])
    a, b = run_recursion(spec, data, pv), run_recursion(spec, data, pv)
    assert np.array_equal(a.eta, b.eta, equal_nan=True) and np.array_equal(a.innov, b.innov)


def test_shape_errors():
    data = DesignData.from_arrays([1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        run_recursion(ModelSpec(1, 1, k=1), data, ParamVector([0, 0], [0], [0], [0]))
    with pytest.raises(ShapeError):
        run_recursion(ModelSpec(1, 1), data, ParamVector([0], [0], [0, 0], [0]))
    with pytest.raises(ShapeError):
        run_recursion(ModelSpec(3, 0), data, ParamVector([0], [0], [0, 0, 0], []))


def test_nonfinite_reports_time_index():
    y = np.exp(np.linspace(0, 1, 200))
    data = DesignData.from_arrays(y)
    with pytest.raises(NumericError) as err:
        run_recursion(ModelSpec(0, 1), data, ParamVector([0.0], [0.0], [], [-1e3]))
    assert err.value.t is not None and err.value.t > 1


def test_design_validation():
    with pytest.raises(ParameterError, match="row 2"):
        DesignData.from_arrays([1.0, -1.0, 2.0])
    with pytest.raises(ParameterError):
        DesignData.from_arrays([1.0, np.nan])
    with pytest.raises(ShapeError):
        DesignData(np.ones(3), np.ones((2, 1)), np.ones((3, 1)))


def test_param_vector_round_trip():
    spec = ModelSpec(2, 1, 1, 2)
    z = np.arange(spec.n_params, dtype=float)
    pv = ParamVector.from_array(spec, z)
    assert pv.beta.tolist() == [0, 1] and pv.tau_coefs.tolist() == [2, 3, 4]
    assert pv.phi.tolist() == [5, 6] and pv.theta.tolist() == [7]
    assert np.array_equal(pv.to_array(), z)
    assert spec.param_names() == ["beta0", "beta1", "tau0", "tau1", "tau2", "phi1", "phi2", "theta1"]
    with pytest.raises(ShapeError):
        ParamVector.from_array(spec, z[:-1])


def test_spec_validation():
    with pytest.raises(ParameterError):
        ModelSpec(-1, 0)
    with pytest.raises(ParameterError):
        ModelSpec(1, 1, tau_level=1.0)
    with pytest.raises(ParameterError):
        get_link("identity")
    assert ModelSpec(kernel="t" if False else KernelFamily("t", (4,))).kernel.label == "log-t(4)"
    assert isinstance(get_link("log"), LogLink)


# --- polynomials -----------------------------------------------------------------------

def test_psi_arma11():
    psi = psi_weights([0.6], [0.3], 3)
    assert psi[0] == 1.0
    assert psi[1] == pytest.approx(0.9, abs=1e-15)
    assert psi[2] == pytest.approx(0.54, abs=1e-15)


def test_psi_geometric():
    assert np.allclose(psi_weights([0.5], [], 10), 0.5 ** np.arange(11), rtol=0, atol=1e-15)


def test_psi_nonstationary_raises():
    with pytest.raises(StationarityError):
        psi_weights([1.0], [], 5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=2, max_size=2),
       st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_psi_convolution_identity(roots_inv, theta):
    # AR polynomial from inverse roots inside the unit disc
    phi = [roots_inv[0] + roots_inv[1], -roots_inv[0] * roots_inv[1]]
    psi = psi_weights(phi, theta, 30)
    # Phi(B) Psi(B) = Theta(B)
    conv = np.convolve([1.0, -phi[0], -phi[1]], psi)[:31]
    expect = np.zeros(31)
    expect[:3] = [1.0, theta[0], theta[1]]
    assert np.allclose(conv, expect, atol=1e-10)
    assert np.allclose(psi, long_division(phi, theta, 30), atol=1e-10)


def test_stationarity_reports():
    assert check_stationarity([0.6]).stationary
    assert not check_stationarity([1.0]).stationary
    assert check_stationarity([0.9191]).stationary
    rep = check_stationarity([0.5], [1.5])
    assert rep.stationary and not rep.invertible
    assert rep.ar_roots[0] == pytest.approx(2.0)
    assert check_stationarity([], []).stationary


def test_autocorrelation_matches_statsmodels():
    phi, theta = [0.6, -0.2], [0.3, 0.1]
    ours = arma_autocorrelation(phi, theta, 10)
    ref = arma_acf(np.r_[1, -np.array(phi)], np.r_[1, theta], lags=11)
    assert np.allclose(ours, ref, atol=1e-12)
