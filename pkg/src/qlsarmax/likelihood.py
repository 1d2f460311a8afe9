"""Conditional log-likelihood of the QLS-ARMAX model and its derivatives.

Per observation ``t > m`` the contribution is

    l_t = log g(z_t^2) - log(kappa_t) / 2 + log(xi_nc)

with ``z_t = [log(y_t / Q_t) + sqrt(kappa_t) z_tau] / sqrt(kappa_t)``.  The
normalizing constant is kept so that information criteria are comparable
across kernels; the Jacobian term ``-log y_t`` is a constant of the data and
is only added on request.

Derivatives are taken with respect to ``lambda_t = log Q_t`` and
``omega_t = log kappa_t`` first and then chained through the links and the
ARMA recursion.  The gradient of ``eta_t`` with respect to the mean block
``(beta, phi, theta)`` satisfies

    D_t + sum_j theta_j D_{t-j} = grad a_t + sum_j e_{theta_j} r_{t-j},

an ARMA-type filter run with zero pre-sample values.  The second-order term
``sum_t c_t grad^2 eta_t`` of the Hessian is obtained with the adjoint
(time-reversed) filter, so no ``n x K x K`` array is formed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import lfilter

from .arma import DesignData, ModelSpec, ParamVector, run_recursion
from .exceptions import NumericError, ParameterError, SingularInformationError
from .kernels import StandardKernel

__all__ = [
    "LikelihoodContext",
    "HessianMode",
    "HessianResult",
    "loglik",
    "score",
    "hessian",
    "observed_info_se",
]


class HessianMode(str, Enum):
    ANALYTIC = "analytic"
    FINITE_DIFF = "finite_diff"


class LikelihoodContext:
    """Model specification, data and kernel bound together for one fit.

    Parameters
    ----------
    spec : ModelSpec
    data : DesignData
    kernel : StandardKernel, optional
        Built from ``spec.kernel`` when omitted; pass a shared instance to
        reuse its caches across many contexts.
    """

    def __init__(self, spec: ModelSpec, data: DesignData, kernel: StandardKernel | None = None):
        data.check_spec(spec)
        if kernel is None:
            kernel = StandardKernel(spec.kernel)
        elif kernel.family != spec.kernel:
            raise ParameterError(f"kernel {kernel.family.label} does not match spec {spec.kernel.label}")
        self.spec = spec
        self.data = data
        self.kernel = kernel
        self.z_tau = float(kernel.quantile(spec.tau_level))
        self.log_xi = kernel.log_xi_nc
        self.log_y = np.log(data.y)
        self.n_used = data.n - spec.m
        k1, l1, p, q = spec.k + 1, spec.l + 1, spec.p, spec.q
        # positions of (beta, phi, theta) and tau inside zeta
        self.mean_index = np.concatenate([np.arange(k1), np.arange(k1 + l1, k1 + l1 + p + q)])
        self.disp_index = np.arange(k1, k1 + l1)

    def params(self, zeta) -> ParamVector:
        if isinstance(zeta, ParamVector):
            return zeta
        return ParamVector.from_array(self.spec, zeta)

    def with_tau(self, tau_level: float) -> "LikelihoodContext":
        return LikelihoodContext(self.spec.with_tau(tau_level), self.data, self.kernel)


@dataclass(frozen=True)
class HessianResult:
    """Symmetrized Hessian with the relative asymmetry of the raw matrix."""

    matrix: np.ndarray
    mode: HessianMode
    asymmetry: float


def _first_bad_t(values: np.ndarray, m: int) -> int:
    return m + int(np.argmax(~np.isfinite(values))) + 1


def _evaluate(ctx: LikelihoodContext, zeta, order: int):
    spec, data = ctx.spec, ctx.data
    pv = ctx.params(zeta)
    st = run_recursion(spec, data, pv)
    n, m, k1, p, q = data.n, spec.m, spec.k + 1, spec.p, spec.q
    s = slice(m, None)
    lam = np.log(st.Q[s])
    om = np.log(st.kappa[s])
    sk = np.exp(0.5 * om)
    dz = (ctx.log_y[s] - lam) / sk
    z = dz + ctx.z_tau
    rho, rho1, rho2 = ctx.kernel.rho_derivs(z)
    terms = rho - 0.5 * om
    ll = float(np.sum(terms)) + ctx.n_used * ctx.log_xi
    if not math.isfinite(ll):
        raise NumericError("non-finite log-likelihood", t=_first_bad_t(terms, m))
    if order == 0:
        return ll, None, None

    lam1, lam2 = spec.mean_link.log_inverse_derivs(st.eta[s])
    om1, om2 = spec.disp_link.log_inverse_derivs(st.gamma[s])
    l_lam = -rho1 / sk
    l_om = -0.5 * rho1 * dz - 0.5

    # gradient of a_t and the MA forcing terms, then the MA filter
    K = k1 + p + q
    B = np.empty((n - m, K))
    Xs = data.X[s]
    B[:, :k1] = Xs
    if p:
        dev = st.hy - data.X @ pv.beta
        for i, ph in enumerate(pv.phi, start=1):
            B[:, :k1] -= ph * data.X[m - i: n - i]
            B[:, k1 + i - 1] = dev[m - i: n - i]
    for j in range(1, q + 1):
        B[:, k1 + p + j - 1] = st.innov[m - j: n - j]
    ar = np.concatenate([[1.0], pv.theta])
    D = lfilter([1.0], ar, B, axis=0) if q else B

    c = l_lam * lam1
    Ws = data.W[s]
    grad = np.empty(spec.n_params)
    grad[ctx.mean_index] = D.T @ c
    grad[ctx.disp_index] = Ws.T @ (l_om * om1)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite score")
    if order == 1:
        return ll, grad, None

    kap = sk * sk
    l_ll = rho2 / kap
    l_lo = (0.5 * rho2 * dz + 0.5 * rho1) / sk
    l_oo = 0.25 * rho2 * dz * dz + 0.25 * rho1 * dz
    Hmm = (D * (l_ll * lam1 * lam1 + l_lam * lam2)[:, None]).T @ D
    # sum_t c_t grad^2 eta_t through the adjoint filter
    u = lfilter([1.0], ar, c[::-1])[::-1] if q else c
    C2 = np.zeros((K, K))
    for i in range(1, p + 1):
        col = -(data.X[m - i: n - i].T @ u)
        C2[:k1, k1 + i - 1] += col
        C2[k1 + i - 1, :k1] += col
    for j in range(1, q + 1):
        vec = -(D[: n - m - j].T @ u[j:])
        C2[k1 + p + j - 1, :] += vec
        C2[:, k1 + p + j - 1] += vec
    Hmm += C2
    Hmd = (D * (l_lo * lam1 * om1)[:, None]).T @ Ws
    Hdd = (Ws * (l_oo * om1 * om1 + l_om * om2)[:, None]).T @ Ws

    H = np.empty((spec.n_params, spec.n_params))
    mi, di = ctx.mean_index, ctx.disp_index
    H[np.ix_(mi, mi)] = Hmm
    H[np.ix_(mi, di)] = Hmd
    H[np.ix_(di, mi)] = Hmd.T
    H[np.ix_(di, di)] = Hdd
    if not np.all(np.isfinite(H)):
        raise NumericError("non-finite Hessian")
    return ll, grad, H


def loglik(ctx: LikelihoodContext, params, include_jacobian: bool = False) -> float:
    """Conditional log-likelihood over ``t = m+1..n``.

    ``include_jacobian=True`` adds ``-sum log y_t`` so that the value equals
    the sum of log densities of the observed responses.
    """
    ll = _evaluate(ctx, params, 0)[0]
    if include_jacobian:
        ll -= float(np.sum(ctx.log_y[ctx.spec.m:]))
    return ll


def score(ctx: LikelihoodContext, params) -> np.ndarray:
    """Analytic gradient of :func:`loglik` in ``zeta`` order."""
    return _evaluate(ctx, params, 1)[1]


def loglik_and_score(ctx: LikelihoodContext, params):
    ll, g, _ = _evaluate(ctx, params, 1)
    return ll, g


def loglik_score_hessian(ctx: LikelihoodContext, params):
    return _evaluate(ctx, params, 2)


def _fd_hessian(ctx: LikelihoodContext, zeta: np.ndarray) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    npar = zeta.size
    H = np.empty((npar, npar))
    base = np.finfo(float).eps ** (1.0 / 3.0)
    for i in range(npar):
        h = base * max(1.0, abs(zeta[i]))
        e = np.zeros(npar)
        e[i] = h
        H[:, i] = (score(ctx, zeta + e) - score(ctx, zeta - e)) / (2.0 * h)
    return H


def hessian(ctx: LikelihoodContext, params, mode: HessianMode | str = HessianMode.ANALYTIC,
            warn_asymmetry: float = 1e-3) -> HessianResult:
    """Hessian of the log-likelihood.

    ``mode="analytic"`` assembles the exact second derivatives;
    ``mode="finite_diff"`` central-differences the analytic score.  The
    returned matrix is ``(H + H') / 2``; ``asymmetry`` is
    ``max|H - H'| / max|H|`` of the raw matrix and a warning is emitted when
    it exceeds ``warn_asymmetry``.
    """
    mode = HessianMode(mode)
    zeta = ctx.params(params).to_array()
    if mode is HessianMode.ANALYTIC:
        H = _evaluate(ctx, zeta, 2)[2]
    else:
        H = _fd_hessian(ctx, zeta)
    scale = float(np.max(np.abs(H))) or 1.0
    asym = float(np.max(np.abs(H - H.T))) / scale
    if asym > warn_asymmetry:
        warnings.warn(f"Hessian asymmetry {asym:.2e} exceeds {warn_asymmetry:g}", RuntimeWarning,
                      stacklevel=2)
    return HessianResult(0.5 * (H + H.T), mode, asym)


def observed_info_se(hessian_at_max) -> np.ndarray:
    """Standard errors ``sqrt(diag((-H)^{-1}))`` from a Hessian at a maximum.

    Raises
    ------
    SingularInformationError
        If ``-H`` is not positive definite.
    """
    H = hessian_at_max.matrix if isinstance(hessian_at_max, HessianResult) else hessian_at_max
    info = -np.asarray(H, dtype=float)
    info = np.atleast_2d(info)
    try:
        c = np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(0.5 * (info + info.T))
        raise SingularInformationError(
            "observed information is not positive definite",
            diagnostics={"min_eigenvalue": float(eig[0])}) from None
    cinv = np.linalg.inv(c)
    return np.sqrt(np.sum(cinv * cinv, axis=0))
