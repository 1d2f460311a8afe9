"""Command-line interface: ``qlsarmax {fit,forecast,simulate,montecarlo,residuals}``.

Exit codes: 0 success, 2 input or configuration error, 3 numeric failure or
non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .arma import DesignData
from .diagnostics import residuals
from .estimation import FitResult, fit, fit_profile
from .exceptions import InputError, NumericError, ParameterError, ShapeError
from .forecasting import ForecastRequest, forecast, forecast_metrics
from .io import (
    RunConfig,
    config_from_dict,
    load_config,
    parse_kernel,
    read_series,
    write_json,
    write_table,
)
from .likelihood import LikelihoodContext
from .simulation import REFERENCE_TRUTH, McDesign, run_mc, simulate_series

log = logging.getLogger("qlsarmax")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    try:
        if args.kernel is not None:
            spec = {"kind": args.kernel}
            if args.extra:
                spec["extra"] = args.extra
            cfg.kernel = parse_kernel(spec)
        elif args.extra:
            cfg.kernel = parse_kernel({"kind": cfg.kernel.kind.value, "extra": args.extra})
        if args.p is not None:
            cfg.p = args.p
        if args.q is not None:
            cfg.q = args.q
        if args.seed is not None:
            cfg.fit = replace(cfg.fit, seed=args.seed)
        if args.tau_level is not None:
            if not 0 < args.tau_level < 1:
                raise InputError("--tau-level must lie in (0, 1)")
            cfg.tau_level = args.tau_level
        cfg.spec()
    except ParameterError as exc:
        raise InputError(str(exc)) from None
    return cfg


def _load_data(cfg: RunConfig, path) -> tuple[DesignData, list | None]:
    series = read_series(path, cfg.needed_columns(), cfg.date_column)
    return cfg.design(series), series.dates


def _write_fit(out: Path, res: FitResult, data: DesignData, dates, prefix: str = "") -> None:
    write_table(out / f"{prefix}estimates.csv", ["parameter", "estimate", "se"], res.table())
    write_table(out / f"{prefix}criteria.csv", ["criterion", "value"],
                [(k, res.criteria.get(k, float("nan"))) for k in ("AIC", "BIC", "CAIC", "HQIC")])
    header = ["t"] + (["date"] if dates else []) + ["y", "fitted_Q", "fitted_kappa", "innovation"]
    rows = []
    for t in range(data.n):
        row = [t + 1] + ([dates[t]] if dates else [])
        rows.append(row + [data.y[t], res.fitted_Q[t], res.fitted_kappa[t], res.innovations[t]])
    write_table(out / f"{prefix}fitted.csv", header, rows)


def _fit_summary(res: FitResult) -> dict:
    return {
        "kernel": res.spec.kernel.label,
        "tau_level": res.tau_level,
        "p": res.spec.p,
        "q": res.spec.q,
        "loglik": res.loglik,
        "n_used": res.n_used,
        "criteria": res.criteria,
        "converged": res.converged,
        "iterations": res.iterations,
        "score_norm": res.score_norm,
        "stationary": res.stationarity.stationary,
        "invertible": res.stationarity.invertible,
        "message": res.message,
        "warnings": res.warnings,
        "estimates": {name: {"estimate": est, "se": se} for name, est, se in res.table()},
    }


def _fit_main(cfg: RunConfig, data: DesignData) -> tuple[LikelihoodContext, FitResult]:
    ctx = LikelihoodContext(cfg.spec(), data)
    return ctx, fit(ctx, cfg.fit)


def cmd_fit(args) -> int:
    cfg = _config(args)
    out = cfg.resolve_output_dir(args.output_dir)
    data, dates = _load_data(cfg, args.data)
    ctx, res = _fit_main(cfg, data)
    _write_fit(out, res, data, dates)
    summary = _fit_summary(res)
    if cfg.tau_grid:
        prof = fit_profile(ctx, cfg.fit, cfg.tau_grid)
        names, traj = prof.trajectory()
        write_table(out / "profile.csv", ["tau"] + names,
                    [[t] + list(row) for t, row in zip(prof.tau_grid, traj)])
        summary["profile_failures"] = {str(k): v for k, v in prof.failures.items()}
    write_json(out / "summary.json", summary)
    _report(res)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _report(res: FitResult) -> None:
    print(f"{res.spec.kernel.label} ARMA({res.spec.p},{res.spec.q}) tau={res.tau_level:g}: "
          f"loglik={res.loglik:.4f} converged={res.converged}")
    for name, est, se in res.table():
        print(f"  {name:>8s} {est: .4f} ({se:.4f})")


def cmd_forecast(args) -> int:
    cfg = _config(args)
    if cfg.horizon is None and args.horizon is None:
        raise InputError("forecast horizon missing: set forecast.horizon or --horizon")
    horizon = args.horizon or cfg.horizon
    out = cfg.resolve_output_dir(args.output_dir)
    data, _ = _load_data(cfg, args.data)
    fut_cols = list(dict.fromkeys(cfg.mean_covariates + cfg.disp_covariates))
    future = read_series(args.future, fut_cols, cfg.date_column)
    if future.n < horizon:
        raise InputError(f"{args.future}: {future.n} rows for horizon {horizon}")
    ones = np.ones((horizon, 1))
    fx = np.hstack([ones] + [future.column(c)[:horizon, None] for c in cfg.mean_covariates])
    fw = np.hstack([ones] + [future.column(c)[:horizon, None] for c in cfg.disp_covariates])
    ctx, res = _fit_main(cfg, data)
    req = ForecastRequest(horizon, fx, fw, cfg.interval_levels)
    fc = forecast(res, ctx.spec, data, req, config=cfg.fit, kernel=ctx.kernel)
    header = ["step"] + (["date"] if future.dates else []) + ["point", "lower", "upper"]
    rows = []
    for s in range(horizon):
        row = [s + 1] + ([future.dates[s]] if future.dates else [])
        lo = fc.lower[s] if fc.lower is not None else float("nan")
        hi = fc.upper[s] if fc.upper is not None else float("nan")
        rows.append(row + [fc.point[s], lo, hi])
    write_table(out / "forecast.csv", header, rows)
    summary = {"basis_tau": fc.basis_tau, "interval_levels": fc.interval_levels,
               "order_violations": fc.order_violations, "fit": _fit_summary(res)}
    if args.actuals:
        act = read_series(args.actuals, [cfg.response]).column(cfg.response)[:horizon]
        if act.size != horizon:
            raise InputError(f"{args.actuals}: need {horizon} actual values, got {act.size}")
        alpha = 1.0 - (fc.interval_levels[1] - fc.interval_levels[0]) if fc.interval_levels else 0.05
        met = forecast_metrics(act, fc.point, fc.lower, fc.upper, data.y, alpha)
        write_table(out / "metrics.csv", list(met), [list(met.values())])
        summary["metrics"] = met
    write_json(out / "forecast_summary.json", summary)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = cfg.resolve_output_dir(args.output_dir)
    sim = cfg.simulate
    n = int(args.n or sim.get("n", 200))
    seed = int(args.seed if args.seed is not None else sim.get("seed", 1))
    spec = cfg.spec()
    truth = sim.get("truth")
    if truth is None:
        if (spec.p, spec.q, spec.k, spec.l) != (1, 1, 1, 1):
            raise InputError("simulate.truth is required unless p=q=1 with one covariate per predictor")
        truth = REFERENCE_TRUTH
    try:
        truth.check_spec(spec)
    except ShapeError as exc:
        raise InputError(f"simulate.truth: {exc}") from None
    rng = np.random.default_rng(seed)
    cov = rng.random((n, spec.k + spec.l))
    X = np.hstack([np.ones((n, 1)), cov[:, : spec.k]])
    W = np.hstack([np.ones((n, 1)), cov[:, spec.k:]])
    y = simulate_series(spec, truth, X, W, uniforms=rng.random(n))
    mean_names = cfg.mean_covariates or [f"x{i + 1}" for i in range(spec.k)]
    disp_names = cfg.disp_covariates or [f"w{i + 1}" for i in range(spec.l)]
    header = ["t", cfg.response] + mean_names + disp_names
    rows = [[t + 1, y[t], *X[t, 1:], *W[t, 1:]] for t in range(n)]
    path = write_table(out / "simulated.csv", header, rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    out = cfg.resolve_output_dir(args.output_dir)
    mc = dict(cfg.montecarlo)
    spec = cfg.spec()
    truth = mc.pop("truth", None)
    if truth is None:
        if (spec.p, spec.q, spec.k, spec.l) != (1, 1, 1, 1):
            raise InputError("montecarlo.truth is required unless p=q=1 with one covariate per predictor")
        truth = REFERENCE_TRUTH
    n_jobs = int(mc.pop("n_jobs", 1))
    if args.replications is not None:
        mc["replications"] = args.replications
    if args.seed is not None:
        mc["seed"] = args.seed
    try:
        design = McDesign(spec=spec, truth=truth, fit_config=cfg.fit, **mc)
    except (ParameterError, ShapeError, TypeError) as exc:
        raise InputError(f"montecarlo: {exc}") from None
    report = run_mc(design, n_jobs=n_jobs,
                    progress=lambda k, t: log.info("finished %s tau=%g", k, t))
    rows = report.bias_mse_rows()
    write_table(out / "bias_mse.csv", list(rows[0]), [list(r.values()) for r in rows])
    for which in ("gcs", "rq"):
        header, table = report.residual_table(which)
        write_table(out / f"residuals_{which}.csv", header, table)
    write_json(out / "montecarlo_summary.json", {
        "replications": design.replications,
        "seed": design.seed,
        "cells": [{"kernel": c.kernel, "n": c.n, "q": c.tau, "convergence_rate": c.convergence_rate,
                   "n_failed": c.n_failed, "flagged": c.flagged} for c in report.cells],
    })
    return EXIT_NUMERIC if report.flagged else EXIT_OK


def cmd_residuals(args) -> int:
    cfg = _config(args)
    out = cfg.resolve_output_dir(args.output_dir)
    data, dates = _load_data(cfg, args.data)
    ctx, res = _fit_main(cfg, data)
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.fit.seed)
    rep = residuals(res, ctx, max_lag=args.max_lag, envelope=True, n_sim=args.n_sim, rng=rng)
    m = ctx.spec.m
    header = ["t"] + (["date"] if dates else []) + ["gcs", "rq"]
    rows = [[t + 1 + m] + ([dates[t + m]] if dates else []) + [g, r]
            for t, (g, r) in enumerate(zip(rep.gcs, rep.rq))]
    write_table(out / "residuals.csv", header, rows)
    stats = ["MN", "MD", "SD", "CS", "CK", "min", "max", "CV", "n"]
    write_table(out / "residual_stats.csv", ["statistic", "gcs", "rq"],
                [[s, rep.stats_gcs[s], rep.stats_rq[s]] for s in stats])
    write_table(out / "acf_pacf.csv", ["lag", "acf", "pacf"],
                [[k, a, p] for k, (a, p) in enumerate(zip(rep.acf, rep.pacf))])
    for name, env in (("qq_rq.csv", rep.envelope), ("qq_gcs.csv", rep.envelope_gcs)):
        cols = env.columns()
        write_table(out / name, list(cols), np.column_stack(list(cols.values())).tolist())
    write_json(out / "residuals_summary.json", {"n_clamped": rep.n_clamped, "fit": _fit_summary(res)})
    return EXIT_OK if res.converged else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlsarmax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="YAML or JSON run configuration")
        if data:
            p.add_argument("--data", required=True, help="CSV series file with a header row")
        p.add_argument("--output-dir", help="output directory (default: config, then $QLSARMAX_OUTPUT_DIR)")
        p.add_argument("--kernel", help="kernel kind, e.g. normal, t, pe, hp, sl, cn, ebs, ebst")
        p.add_argument("--extra", type=float, nargs="+", help="kernel extra parameter(s)")
        p.add_argument("--p", type=int, help="AR order")
        p.add_argument("--q", type=int, help="MA order")
        p.add_argument("--tau-level", type=float, help="quantile level in (0, 1)")
        p.add_argument("--seed", type=int, help="random seed")

    p = sub.add_parser("fit", help="fit a model by conditional maximum likelihood")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="fit, then forecast with optional quantile bands")
    common(p)
    p.add_argument("--future", required=True, help="CSV with future covariate rows")
    p.add_argument("--actuals", help="CSV with realized responses for accuracy metrics")
    p.add_argument("--horizon", type=int, help="forecast horizon")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("simulate", help="simulate a series from a known truth")
    common(p, data=False)
    p.add_argument("--n", type=int, help="series length")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="bias/MSE and residual study over a design grid")
    common(p, data=False)
    p.add_argument("--replications", type=int, help="override montecarlo.replications")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("residuals", help="fit, then write residual diagnostics")
    common(p)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--n-sim", type=int, default=199, help="envelope simulations")
    p.set_defaults(func=cmd_residuals)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, ShapeError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
