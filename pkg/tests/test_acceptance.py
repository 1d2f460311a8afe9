"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line, collected in the terminal summary.
"""

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest
from scipy import integrate, stats

from qlsarmax import (
    DesignData,
    HessianMode,
    KernelFamily,
    LikelihoodContext,
    McDesign,
    ModelSpec,
    QlsDistribution,
    check_stationarity,
    fit,
    hessian,
    loglik,
    psi_weights,
    run_mc,
    score,
    simulate_series,
)
from qlsarmax.cli import main
from qlsarmax.forecasting import forecast_path
from qlsarmax.simulation import REFERENCE_TRUTH

from helpers import KERNELS, kernel, random_instance, record

TAUS = (0.1, 0.25, 0.5, 0.75, 0.9)
N_JOBS = os.cpu_count() or 1


def richardson_gradient(f, x):
    g = np.empty(x.size)
    for i in range(x.size):
        h = 1e-5 * max(1.0, abs(x[i]))
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def test_1_density_normalization():
    start = time.perf_counter()
    worst_int = worst_cdf = 0.0
    for fam in KERNELS:
        k = kernel(fam)
        for tau in TAUS:
            d = QlsDistribution(2.0, 0.5, tau, k)
            c = math.log(2.0)

            def f(s):
                y = math.exp(s)
                return float(d.pdf(y)) * y

            edges = c + np.array([-300.0, -30.0, -5.0, 0.0, 5.0, 30.0, 300.0])
            total = sum(integrate.quad(f, lo, hi, epsabs=1e-12, limit=400)[0]
                        for lo, hi in zip(edges[:-1], edges[1:]))
            worst_int = max(worst_int, abs(total - 1.0))
            worst_cdf = max(worst_cdf, abs(float(d.cdf(2.0)) - tau))
    elapsed = time.perf_counter() - start
    ok = worst_int <= 1e-6 and worst_cdf <= 1e-8 and elapsed < 30
    record(1, "density normalization", ok,
           f"max|int-1|={worst_int:.2e} max|F(Q)-tau|={worst_cdf:.2e} time={elapsed:.1f}s")
    assert ok


def test_2_gradient_oracle():
    start = time.perf_counter()
    worst = 0.0
    for fam in KERNELS:
        rng = np.random.default_rng(zlib.crc32(fam.label.encode()))
        for _ in range(20):
            ctx, zeta = random_instance(rng, fam, tau=float(rng.choice(TAUS)))
            g = score(ctx, zeta)
            ref = richardson_gradient(lambda z: loglik(ctx, z), zeta)
            worst = max(worst, float(np.max(np.abs(g - ref) / np.maximum(np.abs(ref), 1.0))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 60
    record(2, "gradient oracle (8 kernels x 20 instances)", ok,
           f"max rel err={worst:.2e} time={elapsed:.1f}s")
    assert ok


def test_3_hessian_oracle():
    start = time.perf_counter()
    worst = worst_asym = 0.0
    for fam in (KernelFamily("normal"), KernelFamily("t", (4,))):
        rng = np.random.default_rng(31)
        for _ in range(10):
            ctx, zeta = random_instance(rng, fam, n=60, p=1, q=1, k=1, l=1)
            ha = hessian(ctx, zeta, HessianMode.ANALYTIC).matrix
            hf_res = hessian(ctx, zeta, HessianMode.FINITE_DIFF)
            hf = hf_res.matrix
            scale = np.max(np.abs(hf))
            rel = np.abs(ha - hf) / np.maximum(np.abs(hf), 1e-3 * scale)
            worst = max(worst, float(np.max(rel)))
            worst_asym = max(worst_asym, hf_res.asymmetry)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and worst_asym < 1e-6 and elapsed < 60
    record(3, "Hessian oracle (normal, t)", ok,
           f"max rel err={worst:.2e} asymmetry={worst_asym:.2e} time={elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def mc_report():
    design = McDesign(
        spec=ModelSpec(1, 1, 1, 1),
        truth=REFERENCE_TRUTH,
        n_grid=(50, 100, 200),
        tau_grid=(0.25, 0.5, 0.75),
        kernels=(KernelFamily("normal"), KernelFamily("t", (4,))),
        replications=500,
        seed=2024,
    )
    start = time.perf_counter()
    rep = run_mc(design, n_jobs=N_JOBS)
    return rep, time.perf_counter() - start


def test_4_monte_carlo_consistency(mc_report):
    rep, elapsed = mc_report
    names = rep.design.spec.param_names()
    bad = []
    for fam in rep.design.kernels:
        for tau in rep.design.tau_grid:
            cells = [rep.cell(n, tau, fam.label) for n in rep.design.n_grid]
            bias = np.abs(np.array([c.bias for c in cells]))
            mse = np.array([c.mse for c in cells])
            for j, name in enumerate(names):
                if not (bias[0, j] > bias[1, j] > bias[2, j]):
                    bad.append(f"{fam.label} q={tau} {name} |bias| "
                               + "/".join(f"{b:.4f}" for b in bias[:, j]))
                if not (mse[0, j] > mse[1, j] > mse[2, j]):
                    bad.append(f"{fam.label} q={tau} {name} mse not decreasing")
                if not mse[2, j] < 0.6 * mse[0, j]:
                    bad.append(f"{fam.label} q={tau} {name} mse ratio {mse[2, j] / mse[0, j]:.3f}")
    mse_bad = [b for b in bad if "mse" in b]
    ok = not bad
    record(4, "Monte Carlo bias/MSE trend (R=500)", ok,
           f"{len(bad)} violations ({len(mse_bad)} on MSE) time={elapsed:.0f}s"
           + ("; " + "; ".join(bad) if bad else ""))
    assert ok, "\n".join(bad)


def test_5_residual_calibration(mc_report):
    rep, _ = mc_report
    cell = rep.cell(200, 0.5, "log-NO")
    g, r = cell.gcs_stats, cell.rq_stats
    ok = (0.95 <= g["MN"] <= 1.05 and 0.9 <= g["SD"] <= 1.1
          and -0.05 <= r["MN"] <= 0.05 and 0.95 <= r["SD"] <= 1.05)
    record(5, "residual calibration (log-NO, n=200, q=0.5)", ok,
           f"GCS MN={g['MN']:.4f} SD={g['SD']:.4f}; RQ MN={r['MN']:.4f} SD={r['SD']:.4f}")
    assert ok


def test_6_sampling_fidelity():
    worst_ks = worst_q = 0.0
    for i, fam in enumerate(KERNELS):
        d = QlsDistribution(3.0, 0.4, 0.3, kernel(fam))
        y = d.sample(np.random.default_rng(600 + i), 100_000)
        ks = stats.kstest(y, d.cdf).statistic
        q_emp = float(np.quantile(y, 0.3))
        worst_ks = max(worst_ks, ks)
        worst_q = max(worst_q, abs(q_emp / 3.0 - 1.0))
    ok = worst_ks < 0.01 and worst_q < 0.02
    record(6, "sampling fidelity (1e5 draws per kernel)", ok,
           f"max KS={worst_ks:.4f} max quantile rel err={worst_q:.4f}")
    assert ok


def _long_division(phi, theta, horizon):
    num = np.zeros(horizon + 1)
    num[0] = 1.0
    num[1: len(theta) + 1] = theta
    den = np.zeros(horizon + 1)
    den[0] = 1.0
    den[1: len(phi) + 1] = -np.asarray(phi)
    out = np.zeros(horizon + 1)
    rem = num.copy()
    for j in range(horizon + 1):
        out[j] = rem[j]
        rem[j:] -= out[j] * den[: horizon + 1 - j]
    return out


def test_7_psi_weight_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    count = 0
    while count < 100:
        phi = rng.uniform(-1.5, 1.5, 2)
        if not check_stationarity(phi).stationary:
            continue
        theta = rng.uniform(-1.5, 1.5, 2)
        worst = max(worst, float(np.max(np.abs(psi_weights(phi, theta, 50) - _long_division(phi, theta, 50)))))
        count += 1
    ok = worst <= 1e-12
    record(7, "psi-weight oracle (100 ARMA(2,2))", ok, f"max abs err={worst:.2e}")
    assert ok


def _coverage_rep(rep):
    spec = ModelSpec(1, 1, 1, 1, 0.5, "normal")
    rng = np.random.default_rng(np.random.SeedSequence([88, rep]))
    n = 201
    X = np.column_stack([np.ones(n), rng.random(n)])
    W = np.column_stack([np.ones(n), rng.random(n)])
    y = simulate_series(spec, REFERENCE_TRUTH, X, W, rng)
    data = DesignData(y[:-1], X[:-1], W[:-1])
    band = []
    for tau in (0.025, 0.975):
        res = fit(LikelihoodContext(spec.with_tau(tau), data))
        band.append(forecast_path(res, data, X[-1:])[0])
    return band[0] <= y[-1] <= band[1]


def test_8_forecast_interval_coverage():
    start = time.perf_counter()
    if N_JOBS > 1:
        with ProcessPoolExecutor(max_workers=N_JOBS) as ex:
            hits = list(ex.map(_coverage_rep, range(1000), chunksize=20))
    else:
        hits = [_coverage_rep(r) for r in range(1000)]
    cov = float(np.mean(hits))
    ok = abs(cov - 0.95) <= 0.03
    record(8, "one-step 95% band coverage (1000 reps)", ok,
           f"coverage={cov:.3f} time={time.perf_counter() - start:.0f}s")
    assert ok


def test_9_model_selection():
    kernels = [KernelFamily("normal"), KernelFamily("t", (4,)), KernelFamily("pe", (0.5,))]
    aic = {k.label: [] for k in kernels}
    truth_spec = ModelSpec(1, 1, 1, 1, 0.5, KernelFamily("t", (4,)))
    for rep in range(100):
        rng = np.random.default_rng(np.random.SeedSequence([99, rep]))
        n = 200
        X = np.column_stack([np.ones(n), rng.random(n)])
        W = np.column_stack([np.ones(n), rng.random(n)])
        y = simulate_series(truth_spec, REFERENCE_TRUTH, X, W, rng, kernel=kernel(truth_spec.kernel))
        data = DesignData(y, X, W)
        for fam in kernels:
            res = fit(LikelihoodContext(truth_spec.with_kernel(fam), data, kernel(fam)))
            aic[fam.label].append(res.criteria["AIC"])
    means = {k: float(np.mean(v)) for k, v in aic.items()}
    ok = means["log-t(4)"] < min(v for k, v in means.items() if k != "log-t(4)")
    record(9, "mean AIC selects log-t under log-t truth", ok,
           " ".join(f"{k}={v:.2f}" for k, v in means.items()))
    assert ok


def test_10_cli_determinism(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        "kernel: {kind: t, extra: [4]}\n"
        "mean_covariates: [x1]\n"
        "disp_covariates: [w1]\n"
        "forecast: {horizon: 2, interval_levels: [0.025, 0.975]}\n"
        "simulate: {n: 150, seed: 4}\n"
        "montecarlo: {n_grid: [50, 100], tau_grid: [0.5], replications: 4, seed: 9}\n")
    main(["simulate", "--config", str(cfg), "--output-dir", str(tmp_path / "sim")])
    lines = (tmp_path / "sim" / "simulated.csv").read_text().splitlines()
    (tmp_path / "train.csv").write_text("\n".join(lines[:-2]) + "\n")
    (tmp_path / "future.csv").write_text("\n".join([lines[0]] + lines[-2:]) + "\n")
    data = ["--data", str(tmp_path / "train.csv")]
    runs = {
        "fit": ["fit", "--config", str(cfg), *data],
        "forecast": ["forecast", "--config", str(cfg), *data, "--future", str(tmp_path / "future.csv"),
                     "--actuals", str(tmp_path / "future.csv")],
        "montecarlo": ["montecarlo", "--config", str(cfg)],
    }
    differing = []
    for name, args in runs.items():
        outs = []
        for i in range(2):
            d = tmp_path / f"{name}{i}"
            assert main(args + ["--output-dir", str(d)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        if outs[0] != outs[1]:
            differing.append(name)
    ok = not differing
    record(10, "CLI determinism (fit, forecast, montecarlo)", ok,
           "all outputs byte-identical" if ok else f"differs: {differing}")
    assert ok
