"""Conditional maximum-likelihood estimation.

The optimizer is a BFGS quasi-Newton ascent on the analytic score with a
backtracking line search that only accepts steps which do not decrease the
log-likelihood (non-finite trial points count as rejections, which keeps the
search out of explosive MA regions).  A few Newton steps with the analytic
Hessian polish the solution when the observed information is positive
definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .arma import (
    DesignData,
    ModelSpec,
    ParamVector,
    StationarityReport,
    check_stationarity,
    run_recursion,
)
from .exceptions import (
    CollinearityError,
    ConvergenceError,
    NumericError,
    ParameterError,
    ShapeError,
    SingularInformationError,
)
from .kernels import KernelFamily, StandardKernel
from .likelihood import (
    HessianMode,
    LikelihoodContext,
    hessian,
    loglik_and_score,
    loglik_score_hessian,
    observed_info_se,
)

__all__ = [
    "FitConfig",
    "FitResult",
    "ProfileResult",
    "initialize",
    "fit",
    "information_criteria",
    "fit_profile",
    "kernel_grid",
    "quantile_crossing_rate",
    "warm_start",
]


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    Attributes
    ----------
    max_iters : int
        Iteration cap per start (BFGS plus Newton polish).
    grad_tol : float
        Convergence when ``max|score| <= grad_tol * (1 + |loglik|)``.
    step_tol : float
        Stop when the accepted step is below ``step_tol * (1 + max|zeta|)``.
    multistart : int
        Number of starts; starts after the first perturb the initializer.
    seed : int
        Seed for the perturbations.
    newton_polish : bool
        Finish with Newton steps on the analytic Hessian.
    compute_se : bool
        Standard errors from the observed information.
    """

    max_iters: int = 500
    grad_tol: float = 1e-6
    step_tol: float = 1e-10
    multistart: int = 3
    seed: int = 0
    newton_polish: bool = True
    compute_se: bool = True

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.step_tol > 0):
            raise ParameterError("tolerances must be positive")
        if self.multistart < 1:
            raise ParameterError("multistart must be >= 1")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``fitted_Q``, ``fitted_kappa`` and ``innovations`` have full length ``n``;
    the first ``m`` entries of ``fitted_Q`` are NaN and of ``innovations``
    zero.
    """

    spec: ModelSpec
    params: ParamVector
    se: np.ndarray | None
    loglik: float
    n_used: int
    criteria: dict
    fitted_Q: np.ndarray
    fitted_kappa: np.ndarray
    innovations: np.ndarray
    converged: bool
    iterations: int
    score_norm: float
    stationarity: StationarityReport
    message: str = ""
    warnings: list = field(default_factory=list)
    n_starts_failed: int = 0

    @property
    def tau_level(self) -> float:
        return self.spec.tau_level

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def table(self) -> list[tuple[str, float, float]]:
        """``(name, estimate, se)`` rows; ``se`` is NaN when unavailable."""
        est = self.params.to_array()
        se = self.se if self.se is not None else np.full(est.size, np.nan)
        return list(zip(self.spec.param_names(), est.tolist(), se.tolist()))


def information_criteria(loglik: float, n_params: int, n_used: int) -> dict:
    """AIC, BIC, CAIC (small-sample corrected AIC) and HQIC.

    Raises
    ------
    ParameterError
        When ``n_used <= n_params + 1`` (corrected AIC undefined).
    """
    if n_used <= n_params + 1:
        raise ParameterError(f"corrected AIC undefined for n_used={n_used}, n_params={n_params}")
    k, n = n_params, n_used
    dev = -2.0 * loglik
    return {
        "AIC": dev + 2.0 * k,
        "BIC": dev + k * math.log(n),
        "CAIC": dev + 2.0 * k * n / (n - k - 1),
        "HQIC": dev + 2.0 * k * math.log(math.log(n)),
    }


# --- initialization -----------------------------------------------------------

def _ols(X: np.ndarray, y: np.ndarray, names=None) -> np.ndarray:
    _, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = d[0] * max(X.shape) * np.finfo(float).eps if d.size else 0.0
    rank = int(np.sum(d > tol))
    if rank < X.shape[1]:
        bad = sorted(int(c) for c in piv[rank:])
        labels = [names[c] if names else f"column {c}" for c in bad]
        raise CollinearityError(f"design matrix is rank deficient; dependent: {', '.join(labels)}", labels)
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _lagmat(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    n = x.size
    return np.column_stack([x[start - i: n - i] for i in range(1, lags + 1)])


def _project(coefs: np.ndarray, ma: bool, shrink: float = 0.9, margin: float = 1.02) -> np.ndarray:
    c = np.array(coefs, dtype=float)
    for _ in range(200):
        rep = check_stationarity(c if not ma else (), c if ma else ())
        roots = rep.ma_roots if ma else rep.ar_roots
        if roots.size == 0 or np.min(np.abs(roots)) > margin:
            return c
        c *= shrink
    return np.zeros_like(c)


def _arma_start(e: np.ndarray, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Hannan-Rissanen two-stage least squares on a zero-mean series."""
    n = e.size
    if p == 0 and q == 0:
        return np.zeros(0), np.zeros(0)
    e = e - e.mean()
    if q == 0:
        Z = _lagmat(e, p, p)
        phi = np.linalg.lstsq(Z, e[p:], rcond=None)[0]
        return _project(phi, False), np.zeros(0)
    long_order = int(min(max(2 * (p + q), math.ceil(math.log(n) ** 1.5)), n // 4))
    long_order = max(long_order, 1)
    A = _lagmat(e, long_order, long_order)
    a = np.linalg.lstsq(A, e[long_order:], rcond=None)[0]
    eps = np.zeros(n)
    eps[long_order:] = e[long_order:] - A @ a
    start = long_order + max(p, q)
    if n - start <= p + q + 1:
        return np.zeros(p), np.zeros(q)
    cols = []
    if p:
        cols.append(_lagmat(e, p, start))
    cols.append(_lagmat(eps, q, start))
    Z = np.column_stack(cols)
    coef = np.linalg.lstsq(Z, e[start:], rcond=None)[0]
    return _project(coef[:p], False), _project(coef[p:], True)


def _quantile_intercept_shift(phi, theta, sk_ztau: float) -> float:
    # offset between the least-squares intercept and the tau-quantile intercept
    return (1.0 + float(np.sum(theta))) / (1.0 - float(np.sum(phi))) * sk_ztau


def initialize(spec: ModelSpec, data: DesignData, kernel: StandardKernel | None = None,
               column_names: Sequence[str] | None = None) -> ParamVector:
    """Least-squares starting values.

    ``beta`` comes from ordinary least squares of ``h(y)`` on ``X``, the ARMA
    coefficients from a Hannan-Rissanen regression on the residuals
    (projected into the stationary and invertible region).  The dispersion
    intercept matches the innovation spread to the kernel's interquartile
    range, and the mean intercept is moved from the centre of the law to its
    ``tau`` quantile.
    """
    data.check_spec(spec)
    kernel = kernel if kernel is not None else StandardKernel(spec.kernel)
    if data.n - spec.m <= spec.n_params:
        raise ShapeError(f"need n - m > {spec.n_params} observations, got {data.n - spec.m}")
    hy = spec.mean_link.link(data.y)
    beta = _ols(data.X, hy, column_names)
    e = hy - data.X @ beta
    phi, theta = _arma_start(e, spec.p, spec.q)
    tau = np.zeros(spec.l + 1)
    pv = ParamVector(beta, tau, phi, theta)
    r = run_recursion(spec, data, pv).innov[spec.m:]
    q25, q75 = np.percentile(r, [25.0, 75.0])
    z75 = float(kernel.quantile(0.75))
    kappa0 = max(((q75 - q25) / (2.0 * z75)) ** 2, 1e-8)
    tau[0] = spec.disp_link.link(kappa0)
    z_tau = float(kernel.quantile(spec.tau_level))
    beta = beta.copy()
    beta[0] += _quantile_intercept_shift(phi, theta, math.sqrt(kappa0) * z_tau)
    return ParamVector(beta, tau, phi, theta)


# --- optimizer ------------------------------------------------------------------

class _Objective:
    """Negative log-likelihood with non-finite values mapped to ``inf``."""

    def __init__(self, ctx: LikelihoodContext):
        self.ctx = ctx
        self.evals = 0

    def __call__(self, x):
        self.evals += 1
        try:
            with np.errstate(all="ignore"):
                ll, g = loglik_and_score(self.ctx, x)
        except (NumericError, ParameterError):
            return math.inf, None
        return -ll, -g


def _converged(f: float, g: np.ndarray, grad_tol: float) -> bool:
    return float(np.max(np.abs(g))) <= grad_tol * (1.0 + abs(f))


def _bfgs(obj: _Objective, x0: np.ndarray, cfg: FitConfig):
    x = np.array(x0, dtype=float)
    f, g = obj(x)
    if not math.isfinite(f):
        raise NumericError("log-likelihood not finite at the starting point")
    n = x.size
    Hinv = np.eye(n)
    first = True
    it = 0
    msg = "iteration limit"
    while it < cfg.max_iters:
        if _converged(f, g, cfg.grad_tol):
            msg = "gradient tolerance"
            break
        d = -Hinv @ g
        slope = float(g @ d)
        if not slope < 0:
            Hinv = np.eye(n)
            d = -g
            slope = float(g @ d)
        step = 1.0
        dmax = float(np.max(np.abs(d)))
        if dmax > 1.0 and first:
            step = 1.0 / dmax
        accepted = False
        for _ in range(60):
            xn = x + step * d
            fn, gn = obj(xn)
            if math.isfinite(fn) and fn <= f + 1e-4 * step * slope:
                accepted = True
                break
            if math.isfinite(fn):
                # safeguarded quadratic interpolation
                denom = 2.0 * (fn - f - step * slope)
                t = -slope * step * step / denom if denom > 0 else 0.5 * step
                step = min(max(t, 0.1 * step), 0.5 * step)
            else:
                step *= 0.25
        it += 1
        if not accepted:
            msg = "line search failed"
            break
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            if first:
                Hinv = np.eye(n) * (sy / float(yv @ yv))
            rho = 1.0 / sy
            Hy = Hinv @ yv
            Hinv = (Hinv - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                    + (rho * rho * float(yv @ Hy) + rho) * np.outer(s, s))
            first = False
        small_step = float(np.max(np.abs(s))) <= cfg.step_tol * (1.0 + float(np.max(np.abs(x))))
        x, f, g = xn, fn, gn
        if small_step:
            msg = "step tolerance"
            break
    return x, f, g, it, msg


def _newton_polish(ctx: LikelihoodContext, x: np.ndarray, f: float, g: np.ndarray,
                   cfg: FitConfig, max_steps: int = 8):
    it = 0
    for _ in range(max_steps):
        try:
            with np.errstate(all="ignore"):
                _, _, H = loglik_score_hessian(ctx, x)
            c = np.linalg.cholesky(-H)
        except (NumericError, np.linalg.LinAlgError):
            break
        d = linalg.cho_solve((c, True), -g)  # g is the negative score
        accepted = False
        step = 1.0
        for _ in range(30):
            xn = x + step * d
            try:
                with np.errstate(all="ignore"):
                    ll, sc = loglik_and_score(ctx, xn)
            except (NumericError, ParameterError):
                step *= 0.5
                continue
            if -ll <= f + 1e-12 * (1.0 + abs(f)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        it += 1
        done = _converged(-ll, sc, cfg.grad_tol * 1e-3)
        x, f, g = xn, -ll, -sc
        if done:
            break
    return x, f, g, it


def _perturb(spec: ModelSpec, base: ParamVector, rng: np.random.Generator) -> ParamVector:
    beta = base.beta + rng.normal(0.0, 0.1, base.beta.size)
    tau = base.tau_coefs + rng.normal(0.0, 0.2, base.tau_coefs.size)
    phi = _project(base.phi + rng.normal(0.0, 0.15, base.phi.size), False)
    theta = _project(base.theta + rng.normal(0.0, 0.15, base.theta.size), True)
    return ParamVector(beta, tau, phi, theta)


def _single_start(ctx: LikelihoodContext, x0: np.ndarray, cfg: FitConfig):
    obj = _Objective(ctx)
    x, f, g, it, msg = _bfgs(obj, x0, cfg)
    budget = min(8, cfg.max_iters - it)
    if cfg.newton_polish and budget > 0:
        x, f, g, it2 = _newton_polish(ctx, x, f, g, cfg, budget)
        it += it2
        if it2 and _converged(f, g, cfg.grad_tol):
            msg = "gradient tolerance"
    return x, f, g, it, msg


def fit(ctx: LikelihoodContext, config: FitConfig | None = None,
        start: ParamVector | np.ndarray | None = None) -> FitResult:
    """Maximize the conditional log-likelihood.

    Parameters
    ----------
    ctx : LikelihoodContext
    config : FitConfig, optional
    start : ParamVector or array, optional
        First starting point; defaults to :func:`initialize`.

    Returns
    -------
    FitResult
        The best start by log-likelihood.  ``converged`` is true only when
        the gradient criterion holds at the returned point.

    Raises
    ------
    ConvergenceError
        If every start fails numerically.
    """
    cfg = config or FitConfig()
    spec = ctx.spec
    base = ctx.params(start) if start is not None else initialize(spec, ctx.data, ctx.kernel)
    rng = np.random.default_rng(cfg.seed)
    starts = [base] + [_perturb(spec, base, rng) for _ in range(cfg.multistart - 1)]
    best = None
    trace = []
    failed = 0
    for i, s in enumerate(starts):
        try:
            x, f, g, it, msg = _single_start(ctx, s.to_array(), cfg)
        except (NumericError, ParameterError) as exc:
            failed += 1
            trace.append({"start": i, "error": str(exc)})
            continue
        ok = _converged(f, g, cfg.grad_tol)
        trace.append({"start": i, "loglik": -f, "iterations": it, "converged": ok, "message": msg})
        key = (ok, -f)
        if best is None or key > best[0]:
            best = (key, x, f, g, it, msg)
    if best is None:
        raise ConvergenceError("all optimizer starts failed", trace)
    (ok, _), x, f, g, it, msg = best
    return _build_result(ctx, x, -f, -g, ok, it, msg, cfg, failed)


def _build_result(ctx, x, ll, sc, ok, iterations, msg, cfg: FitConfig, failed: int) -> FitResult:
    spec = ctx.spec
    pv = ParamVector.from_array(spec, x)
    st = run_recursion(spec, ctx.data, pv)
    notes = []
    se = None
    if cfg.compute_se:
        try:
            H = hessian(ctx, pv, HessianMode.ANALYTIC)
            se = observed_info_se(H)
        except SingularInformationError as exc:
            notes.append(f"standard errors unavailable: {exc}")
        except NumericError as exc:
            notes.append(f"Hessian failed: {exc}")
    stat = check_stationarity(pv.phi, pv.theta)
    if not stat.stationary:
        notes.append("fitted AR polynomial is not stationary")
    if not stat.invertible:
        notes.append("fitted MA polynomial is not invertible")
    try:
        crit = information_criteria(ll, spec.n_params, ctx.n_used)
    except ParameterError as exc:
        crit = {}
        notes.append(str(exc))
    return FitResult(
        spec=spec,
        params=pv,
        se=se,
        loglik=ll,
        n_used=ctx.n_used,
        criteria=crit,
        fitted_Q=st.Q,
        fitted_kappa=st.kappa,
        innovations=st.innov,
        converged=bool(ok),
        iterations=int(iterations),
        score_norm=float(np.max(np.abs(sc))),
        stationarity=stat,
        message=msg,
        warnings=notes,
        n_starts_failed=failed,
    )


# --- quantile profiles and kernel selection ------------------------------------------

@dataclass
class ProfileResult:
    """Fits across a grid of quantile levels; failed levels map to messages."""

    tau_grid: np.ndarray
    fits: list
    failures: dict

    def trajectory(self) -> tuple[list[str], np.ndarray]:
        """Parameter names and an array ``(len(tau_grid), n_params)`` (NaN for failures)."""
        names = None
        rows = []
        for f in self.fits:
            if f is None:
                rows.append(None)
            else:
                names = f.spec.param_names()
                rows.append(f.params.to_array())
        width = len(names) if names else 0
        out = np.full((len(rows), width), np.nan)
        for i, r in enumerate(rows):
            if r is not None:
                out[i] = r
        return names or [], out


def warm_start(pv: ParamVector, kernel: StandardKernel, tau_old: float, tau_new: float) -> ParamVector:
    dz = float(kernel.quantile(tau_new) - kernel.quantile(tau_old))
    sk = math.exp(0.5 * pv.tau_coefs[0])
    beta = pv.beta.copy()
    phi_sum = float(np.sum(pv.phi))
    if phi_sum < 0.99:
        beta[0] += _quantile_intercept_shift(pv.phi, pv.theta, sk * dz)
    return ParamVector(beta, pv.tau_coefs, pv.phi, pv.theta)


def fit_profile(ctx: LikelihoodContext, config: FitConfig | None = None,
                tau_grid: Sequence[float] = (0.5,)) -> ProfileResult:
    """One fit per quantile level, each warm-started from the previous level.

    The first level starts from :func:`initialize`; a failure at one level is
    recorded and the next level restarts cold.
    """
    grid = np.asarray(tau_grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any((grid <= 0) | (grid >= 1)):
        raise ParameterError("tau_grid must be a nonempty subset of (0, 1)")
    fits: list = []
    failures: dict = {}
    prev = None
    for tau in grid:
        c = ctx.with_tau(float(tau))
        start = None
        if prev is not None:
            start = warm_start(prev.params, ctx.kernel, prev.tau_level, float(tau))
        try:
            res = fit(c, config, start)
        except (NumericError, ParameterError) as exc:
            failures[float(tau)] = str(exc)
            fits.append(None)
            prev = None
            continue
        fits.append(res)
        prev = res if res.converged else None
        if not res.converged:
            failures[float(tau)] = f"not converged: {res.message}"
    return ProfileResult(grid, fits, failures)


def kernel_grid(spec: ModelSpec, data: DesignData, kernels: Sequence[KernelFamily],
                config: FitConfig | None = None, criterion: str = "AIC"):
    """Fit each kernel (with fixed extras) and rank by an information criterion.

    Returns
    -------
    best : FitResult or None
    table : list of (label, criterion value or NaN, FitResult or error message)
    """
    rows = []
    for fam in kernels:
        fam = fam if isinstance(fam, KernelFamily) else KernelFamily(fam)
        try:
            res = fit(LikelihoodContext(spec.with_kernel(fam), data), config)
            val = res.criteria.get(criterion, math.nan) if res.converged else math.nan
            rows.append((fam.label, val, res))
        except (NumericError, ParameterError) as exc:
            rows.append((fam.label, math.nan, str(exc)))
    ok = [r for r in rows if math.isfinite(r[1])]
    best = min(ok, key=lambda r: r[1])[2] if ok else None
    return best, rows


def quantile_crossing_rate(lower: FitResult, middle: FitResult, upper: FitResult) -> float:
    """Share of time points where fitted quantile curves are out of order."""
    s = slice(max(lower.spec.m, middle.spec.m, upper.spec.m), None)
    lo, mid, hi = lower.fitted_Q[s], middle.fitted_Q[s], upper.fitted_Q[s]
    bad = (lo > mid) | (mid > hi)
    return float(np.mean(bad))
