"""Data generation and the Monte Carlo experiment harness.

Replication ``r`` of a design draws all its randomness from
``default_rng(SeedSequence([seed, r]))`` as rows ``(x_t, w_t, u_t)`` of
uniforms, so a series of length 50 is a prefix of the series of length 200
for the same replication, and the same draws are reused across quantile
levels and kernels.  This common-random-numbers layout makes comparisons
between cells much less noisy than independent streams would.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arma import DesignData, ModelSpec, ParamVector
from .diagnostics import residuals
from .estimation import FitConfig, fit
from .exceptions import NumericError, ParameterError, ShapeError
from .kernels import KernelFamily, StandardKernel
from .likelihood import LikelihoodContext

__all__ = [
    "simulate_series",
    "McDesign",
    "McCell",
    "McReport",
    "replication_draws",
    "run_mc",
    "REFERENCE_TRUTH",
]

RESIDUAL_STATS = ("MN", "MD", "SD", "CS", "CK")

#: parameter values of the reference ARMAX(1,1) design with one covariate in each predictor
REFERENCE_TRUTH = ParamVector(beta=[1.0, 0.7], tau_coefs=[0.5, 1.5], phi=[0.6], theta=[0.3])


def simulate_series(spec: ModelSpec, truth: ParamVector, X, W, rng: np.random.Generator | None = None,
                    uniforms=None, kernel: StandardKernel | None = None) -> np.ndarray:
    """Generate a response path forward in time.

    The first ``m`` observations are drawn from the regression law
    ``QLS(h^{-1}(x_t'beta), d^{-1}(w_t'tau))`` with zero innovations; later
    ones follow the ARMA recursion.

    Parameters
    ----------
    spec, truth : model and parameter values
    X, W : designs with leading intercept columns
    rng : Generator, optional
        Source of uniforms when ``uniforms`` is not given.
    uniforms : array, optional
        ``n`` uniforms driving the innovations through the inverse CDF.
    kernel : StandardKernel, optional
        Shared kernel instance (reuses its sampling table).

    Raises
    ------
    NumericError
        If the predictor becomes non-finite (explosive truth); names ``t``.
    """
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    n = X.shape[0]
    truth.check_spec(spec)
    if X.shape != (n, spec.k + 1) or W.shape != (n, spec.l + 1):
        raise ShapeError("designs do not match the model specification")
    if n <= spec.m:
        raise ShapeError("series length must exceed max(p, q)")
    kernel = kernel if kernel is not None else StandardKernel(spec.kernel)
    if uniforms is None:
        if rng is None:
            raise ParameterError("either rng or uniforms is required")
        uniforms = rng.random(n)
    z = kernel.from_uniform(np.asarray(uniforms, dtype=float).reshape(-1)[:n])
    z_tau = float(kernel.quantile(spec.tau_level))
    xb = X @ truth.beta
    kappa = spec.disp_link.inverse(W @ truth.tau_coefs)
    shock = np.sqrt(kappa) * (z - z_tau)
    hy = np.empty(n)
    r = np.zeros(n)
    m = spec.m
    hy[:m] = xb[:m] + shock[:m]
    phi, theta = truth.phi, truth.theta
    for t in range(m, n):
        eta = xb[t]
        for i in range(spec.p):
            eta += phi[i] * (hy[t - 1 - i] - xb[t - 1 - i])
        for j in range(spec.q):
            eta += theta[j] * r[t - 1 - j]
        if not math.isfinite(eta) or abs(eta) > 700.0:
            raise NumericError("simulated quantile predictor diverged", t=t + 1)
        r[t] = shock[t]
        hy[t] = eta + shock[t]
    y = spec.mean_link.inverse(hy)
    if not np.all(np.isfinite(y) & (y > 0)):
        bad = int(np.argmax(~(np.isfinite(y) & (y > 0))))
        raise NumericError("simulated response not positive and finite", t=bad + 1)
    return y


@dataclass(frozen=True)
class McDesign:
    """Monte Carlo design.

    ``spec`` fixes orders and covariate counts; its kernel and quantile level
    are overridden cell by cell from ``kernels`` and ``tau_grid``.
    ``covariate_law`` is ``"uniform01"`` or a fixed ``(n_max, k + l)`` matrix
    whose first ``k`` columns feed ``X`` and the rest ``W``.
    """

    spec: ModelSpec
    truth: ParamVector
    n_grid: tuple = (50, 100, 200)
    tau_grid: tuple = (0.25, 0.5, 0.75)
    kernels: tuple = ()
    replications: int = 500
    covariate_law: object = "uniform01"
    seed: int = 2024
    fit_config: FitConfig = field(default_factory=FitConfig)
    min_convergence_rate: float = 0.8

    def __post_init__(self):
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        self.truth.check_spec(self.spec)
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        kernels = tuple(k if isinstance(k, KernelFamily) else KernelFamily(k) for k in self.kernels)
        object.__setattr__(self, "kernels", kernels or (self.spec.kernel,))
        if any(n <= self.spec.m + self.spec.n_params + 1 for n in self.n_grid):
            raise ParameterError("every n in n_grid must exceed m + number of parameters + 1")
        if any(not 0 < t < 1 for t in self.tau_grid):
            raise ParameterError("tau_grid must lie in (0, 1)")
        law = self.covariate_law
        if not (isinstance(law, str) and law.lower() == "uniform01"):
            mat = np.asarray(law, dtype=float)
            need = self.spec.k + self.spec.l
            if mat.ndim != 2 or mat.shape[1] != need or mat.shape[0] < max(self.n_grid):
                raise ShapeError(f"fixed covariates need shape (>= {max(self.n_grid)}, {need})")
            object.__setattr__(self, "covariate_law", mat)

    @property
    def n_max(self) -> int:
        return max(self.n_grid)


def replication_draws(design: McDesign, rep: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Designs ``X``, ``W`` and innovation uniforms for replication ``rep`` at ``n_max``."""
    spec = design.spec
    k, l = spec.k, spec.l
    rng = np.random.default_rng(np.random.SeedSequence([design.seed, rep]))
    draws = rng.random((design.n_max, k + l + 1))
    if isinstance(design.covariate_law, str):
        cov = draws[:, : k + l]
    else:
        cov = design.covariate_law[: design.n_max]
    ones = np.ones((design.n_max, 1))
    X = np.hstack([ones, cov[:, :k]])
    W = np.hstack([ones, cov[:, k: k + l]])
    return X, W, draws[:, k + l]


@dataclass
class McCell:
    """Results for one ``(n, tau, kernel)`` cell; statistics use converged runs only."""

    n: int
    tau: float
    kernel: str
    param_names: list
    estimates: np.ndarray
    converged: np.ndarray
    bias: np.ndarray
    mse: np.ndarray
    gcs_stats: dict
    rq_stats: dict
    n_failed: int
    convergence_rate: float
    flagged: bool


@dataclass
class McReport:
    design: McDesign
    cells: list

    def cell(self, n: int, tau: float, kernel: str | None = None) -> McCell:
        for c in self.cells:
            if c.n == n and math.isclose(c.tau, tau) and (kernel is None or c.kernel == kernel):
                return c
        raise KeyError((n, tau, kernel))

    @property
    def flagged(self) -> list:
        return [c for c in self.cells if c.flagged]

    def bias_mse_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            for i, name in enumerate(c.param_names):
                rows.append({"kernel": c.kernel, "n": c.n, "q": c.tau, "parameter": name,
                             "bias": float(c.bias[i]), "mse": float(c.mse[i]),
                             "convergence_rate": c.convergence_rate})
        return rows

    def residual_table(self, which: str = "gcs") -> tuple[list[str], list[list]]:
        """Rows ``(n, q, statistic, value per kernel)``."""
        if which not in ("gcs", "rq"):
            raise ParameterError("which must be 'gcs' or 'rq'")
        labels = list(dict.fromkeys(c.kernel for c in self.cells))
        header = ["n", "q", "statistic"] + labels
        rows = []
        for n in self.design.n_grid:
            for tau in self.design.tau_grid:
                for stat in RESIDUAL_STATS:
                    row = [n, tau, stat]
                    for lab in labels:
                        c = self.cell(n, tau, lab)
                        row.append((c.gcs_stats if which == "gcs" else c.rq_stats)[stat])
                    rows.append(row)
        return header, rows


def _one_replication(design: McDesign, spec: ModelSpec, kernel: StandardKernel, rep: int):
    """Fits for every ``n`` of one replication at one ``(tau, kernel)``."""
    X, W, u = replication_draws(design, rep)
    out = []
    try:
        y_full = simulate_series(spec, design.truth, X, W, uniforms=u, kernel=kernel)
    except NumericError:
        return [None] * len(design.n_grid)
    for n in design.n_grid:
        data = DesignData(y_full[:n], X[:n], W[:n])
        ctx = LikelihoodContext(spec, data, kernel)
        try:
            res = fit(ctx, design.fit_config)
        except (NumericError, ParameterError):
            out.append(None)
            continue
        if not res.converged:
            out.append(None)
            continue
        rep_res = residuals(res, ctx, max_lag=1)
        stats_g = [rep_res.stats_gcs[s] for s in RESIDUAL_STATS]
        stats_r = [rep_res.stats_rq[s] for s in RESIDUAL_STATS]
        out.append((res.params.to_array(), stats_g, stats_r))
    return out


def _run_block(args):
    design, spec, rep = args
    kernel = StandardKernel(spec.kernel)
    return _one_replication(design, spec, kernel, rep)


def run_mc(design: McDesign, n_jobs: int = 1, progress=None) -> McReport:
    """Run every ``(tau, kernel)`` combination over all replications and sample sizes.

    Non-converged fits are excluded from the statistics and counted; a cell
    whose convergence rate falls below ``design.min_convergence_rate`` is
    flagged.  Results are aggregated in replication order, so the report does
    not depend on ``n_jobs``.
    """
    base = design.spec
    truth = design.truth.to_array()
    names = base.param_names()
    cells = []
    for fam in design.kernels:
        for tau in design.tau_grid:
            spec = ModelSpec(base.p, base.q, base.k, base.l, tau, fam, base.mean_link, base.disp_link)
            reps = range(design.replications)
            if n_jobs > 1:
                with ProcessPoolExecutor(max_workers=n_jobs) as ex:
                    results = list(ex.map(_run_block, [(design, spec, r) for r in reps], chunksize=8))
            else:
                kernel = StandardKernel(fam)
                results = [_one_replication(design, spec, kernel, r) for r in reps]
            for j, n in enumerate(design.n_grid):
                R = design.replications
                est = np.full((R, truth.size), np.nan)
                gstats = np.full((R, len(RESIDUAL_STATS)), np.nan)
                rstats = np.full((R, len(RESIDUAL_STATS)), np.nan)
                conv = np.zeros(R, dtype=bool)
                for r, res in enumerate(results):
                    if res[j] is not None:
                        est[r], gstats[r], rstats[r] = res[j]
                        conv[r] = True
                nconv = int(conv.sum())
                if nconv:
                    err = est[conv] - truth
                    bias = err.mean(axis=0)
                    mse = (err * err).mean(axis=0)
                    gmean = np.nanmean(gstats[conv], axis=0)
                    rmean = np.nanmean(rstats[conv], axis=0)
                else:
                    bias = mse = np.full(truth.size, np.nan)
                    gmean = rmean = np.full(len(RESIDUAL_STATS), np.nan)
                rate = nconv / R
                cells.append(McCell(
                    n=n, tau=tau, kernel=fam.label, param_names=names, estimates=est,
                    converged=conv, bias=bias, mse=mse,
                    gcs_stats=dict(zip(RESIDUAL_STATS, gmean.tolist())),
                    rq_stats=dict(zip(RESIDUAL_STATS, rmean.tolist())),
                    n_failed=R - nconv, convergence_rate=rate,
                    flagged=rate < design.min_convergence_rate,
                ))
            if progress is not None:
                progress(fam.label, tau)
    return McReport(design, cells)
