"""Deterministic QLS-ARMAX recursions and ARMA polynomial utilities.

The conditional ``tau``-quantile ``Q_t`` and the dispersion ``kappa_t`` are
driven by two linear predictors::

    eta_t   = h(Q_t)     = x_t'beta + sum_i phi_i [h(y_{t-i}) - x_{t-i}'beta]
                                    + sum_j theta_j r_{t-j}
    gamma_t = d(kappa_t) = w_t'tau

with link-scale innovations ``r_t = h(y_t) - eta_t``.  Time is zero-based in
arrays; the first ``m = max(p, q)`` observations are conditioned on and their
innovations are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .exceptions import NumericError, ParameterError, ShapeError, StationarityError
from .kernels import KernelFamily

__all__ = [
    "Link",
    "LogLink",
    "get_link",
    "ModelSpec",
    "DesignData",
    "ParamVector",
    "RecursionState",
    "StationarityReport",
    "run_recursion",
    "psi_weights",
    "check_stationarity",
    "arma_autocorrelation",
]


# --- links ------------------------------------------------------------------

class Link:
    """Strictly increasing link between a positive parameter and the real line.

    Subclasses provide the link, its inverse, and the first two derivatives
    of ``log(inverse(eta))`` in ``eta``; the likelihood only needs the latter.
    """

    name = "abstract"

    def link(self, mu):
        raise NotImplementedError

    def inverse(self, eta):
        raise NotImplementedError

    def log_inverse_derivs(self, eta):
        """Return ``(d/deta, d2/deta2)`` of ``log(inverse(eta))``."""
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"{type(self).__name__}()"


class LogLink(Link):
    name = "log"

    def link(self, mu):
        return np.log(mu)

    def inverse(self, eta):
        return np.exp(eta)

    def log_inverse_derivs(self, eta):
        eta = np.asarray(eta, dtype=float)
        return np.ones_like(eta), np.zeros_like(eta)


_LINKS = {"log": LogLink}


def get_link(link) -> Link:
    if isinstance(link, Link):
        return link
    try:
        return _LINKS[str(link).lower()]()
    except KeyError:
        raise ParameterError(f"unknown link {link!r}; available: {sorted(_LINKS)}") from None


# --- specification and data ---------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Orders, covariate counts, quantile level, kernel and links.

    ``k`` and ``l`` count covariates *excluding* the intercept, so the mean
    design has ``k + 1`` columns and the dispersion design ``l + 1``.
    """

    p: int = 1
    q: int = 1
    k: int = 0
    l: int = 0
    tau_level: float = 0.5
    kernel: KernelFamily = field(default_factory=lambda: KernelFamily("normal"))
    mean_link: Link = field(default_factory=LogLink)
    disp_link: Link = field(default_factory=LogLink)

    def __post_init__(self):
        for name in ("p", "q", "k", "l"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ParameterError(f"{name} must be a nonnegative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not 0.0 < self.tau_level < 1.0:
            raise ParameterError("tau_level must lie in (0, 1)")
        if not isinstance(self.kernel, KernelFamily):
            object.__setattr__(self, "kernel", KernelFamily(self.kernel))
        object.__setattr__(self, "mean_link", get_link(self.mean_link))
        object.__setattr__(self, "disp_link", get_link(self.disp_link))

    @property
    def m(self) -> int:
        return max(self.p, self.q)

    @property
    def n_params(self) -> int:
        return 2 + self.k + self.l + self.p + self.q

    def param_names(self) -> list[str]:
        return ([f"beta{i}" for i in range(self.k + 1)]
                + [f"tau{i}" for i in range(self.l + 1)]
                + [f"phi{i + 1}" for i in range(self.p)]
                + [f"theta{j + 1}" for j in range(self.q)])

    def with_tau(self, tau_level: float) -> "ModelSpec":
        return ModelSpec(self.p, self.q, self.k, self.l, tau_level, self.kernel,
                         self.mean_link, self.disp_link)

    def with_kernel(self, kernel: KernelFamily) -> "ModelSpec":
        return ModelSpec(self.p, self.q, self.k, self.l, self.tau_level, kernel,
                         self.mean_link, self.disp_link)


@dataclass(frozen=True)
class DesignData:
    """Response and design matrices; both designs carry a leading column of ones."""

    y: np.ndarray
    X: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float).reshape(-1)
        X = np.ascontiguousarray(self.X, dtype=float)
        W = np.ascontiguousarray(self.W, dtype=float)
        if X.ndim != 2 or W.ndim != 2:
            raise ShapeError("X and W must be two-dimensional")
        if X.shape[0] != y.size or W.shape[0] != y.size:
            raise ShapeError(f"row counts differ: y={y.size}, X={X.shape[0]}, W={W.shape[0]}")
        for name, a in (("y", y), ("X", X), ("W", W)):
            bad = ~np.isfinite(a)
            if np.any(bad):
                row = int(np.argwhere(bad)[0][0])
                raise ParameterError(f"non-finite value in {name} at row {row + 1}")
        if np.any(y <= 0):
            row = int(np.argmax(y <= 0))
            raise ParameterError(f"response must be positive; row {row + 1} has y = {float(y[row])!r}")
        for name, a in (("y", y), ("X", X), ("W", W)):
            a.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)

    @classmethod
    def from_arrays(cls, y, x=None, w=None) -> "DesignData":
        """Build designs from covariates *without* intercept columns."""
        y = np.asarray(y, dtype=float).reshape(-1)
        n = y.size

        def design(c):
            if c is None:
                return np.ones((n, 1))
            c = np.asarray(c, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            return np.column_stack([np.ones(n), c])

        return cls(y, design(x), design(w))

    @property
    def n(self) -> int:
        return self.y.size

    def check_spec(self, spec: ModelSpec) -> None:
        if self.X.shape[1] != spec.k + 1:
            raise ShapeError(f"X has {self.X.shape[1]} columns, spec expects {spec.k + 1}")
        if self.W.shape[1] != spec.l + 1:
            raise ShapeError(f"W has {self.W.shape[1]} columns, spec expects {spec.l + 1}")
        if spec.m >= self.n:
            raise ShapeError(f"need n > m; got n={self.n}, m={spec.m}")


@dataclass(frozen=True)
class ParamVector:
    """``zeta = (beta, tau_coefs, phi, theta)``."""

    beta: np.ndarray
    tau_coefs: np.ndarray
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("beta", "tau_coefs", "phi", "theta"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(a)):
                raise ParameterError(f"{name} must be finite")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.beta.size < 1 or self.tau_coefs.size < 1:
            raise ShapeError("beta and tau_coefs need at least an intercept")

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.beta, self.tau_coefs, self.phi, self.theta])

    @classmethod
    def from_array(cls, spec: ModelSpec, zeta) -> "ParamVector":
        zeta = np.asarray(zeta, dtype=float).reshape(-1)
        if zeta.size != spec.n_params:
            raise ShapeError(f"expected {spec.n_params} parameters, got {zeta.size}")
        i = np.cumsum([spec.k + 1, spec.l + 1, spec.p])
        return cls(zeta[: i[0]], zeta[i[0]: i[1]], zeta[i[1]: i[2]], zeta[i[2]:])

    def check_spec(self, spec: ModelSpec) -> None:
        want = (spec.k + 1, spec.l + 1, spec.p, spec.q)
        got = (self.beta.size, self.tau_coefs.size, self.phi.size, self.theta.size)
        if want != got:
            raise ShapeError(f"parameter sizes {got} do not match spec {want}")


@dataclass(frozen=True)
class RecursionState:
    """Output of :func:`run_recursion`.

    ``eta``, ``Q`` are NaN for the first ``m`` (conditioning) positions;
    ``innov`` is zero there.  ``a`` is the part of ``eta`` that does not
    depend on the MA coefficients.
    """

    eta: np.ndarray
    gamma: np.ndarray
    Q: np.ndarray
    kappa: np.ndarray
    innov: np.ndarray
    m: int
    hy: np.ndarray
    a: np.ndarray

    @property
    def available(self) -> slice:
        return slice(self.m, None)


def _first_bad(a: np.ndarray, m: int):
    bad = ~np.isfinite(a[m:])
    return None if not bad.any() else m + int(np.argmax(bad)) + 1


def run_recursion(spec: ModelSpec, data: DesignData, params: ParamVector) -> RecursionState:
    """Compute ``eta_t, gamma_t, Q_t, kappa_t, r_t`` for every observation.

    Raises
    ------
    ShapeError
        Dimensions of data or parameters disagree with ``spec``.
    NumericError
        A non-finite predictor appears; the message names the first bad
        (one-based) time index.
    """
    data.check_spec(spec)
    params.check_spec(spec)
    n, m = data.n, spec.m
    hy = spec.mean_link.link(data.y)
    xb = data.X @ params.beta
    a = xb.copy()
    if spec.p:
        dev = hy - xb
        for i, ph in enumerate(params.phi, start=1):
            a[m:] += ph * dev[m - i: n - i]
    r = np.zeros(n)
    if spec.q:
        r[m:] = lfilter([1.0], np.concatenate([[1.0], params.theta]), hy[m:] - a[m:])
    else:
        r[m:] = hy[m:] - a[m:]
    eta = np.full(n, np.nan)
    eta[m:] = hy[m:] - r[m:]
    t_bad = _first_bad(eta, m)
    if t_bad is not None:
        raise NumericError("non-finite quantile predictor", t=t_bad)
    gamma = data.W @ params.tau_coefs
    with np.errstate(over="ignore"):
        Q = np.full(n, np.nan)
        Q[m:] = spec.mean_link.inverse(eta[m:])
        kappa = spec.disp_link.inverse(gamma)
    for name, v in (("Q", Q), ("kappa", kappa)):
        t_bad = _first_bad(v, m)
        if t_bad is None and np.any(v[m:] <= 0):
            t_bad = m + int(np.argmax(v[m:] <= 0)) + 1
        if t_bad is not None:
            raise NumericError(f"{name} not positive and finite", t=t_bad)
    return RecursionState(eta, gamma, Q, kappa, r, m, hy, a)


# --- polynomial utilities -------------------------------------------------------

@dataclass(frozen=True)
class StationarityReport:
    ar_roots: np.ndarray
    ma_roots: np.ndarray
    stationary: bool
    invertible: bool


def _roots(coefs: np.ndarray, sign: float) -> np.ndarray:
    # roots in z of 1 + sign * sum c_i z^i, via the finite inverse roots
    c = np.asarray(coefs, dtype=float)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(0, dtype=complex)
    inv = np.roots(np.concatenate([[1.0], sign * c[: nz[-1] + 1]])).astype(complex)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(inv == 0, np.inf + 0j, 1.0 / inv)


def check_stationarity(phi: Sequence[float], theta: Sequence[float] = ()) -> StationarityReport:
    """Roots of ``1 - sum phi_i z^i`` and ``1 + sum theta_j z^j``.

    Stationary (invertible) when every AR (MA) root lies strictly outside
    the unit circle.
    """
    ar = _roots(phi, -1.0)
    ma = _roots(theta, 1.0)
    return StationarityReport(
        ar_roots=ar,
        ma_roots=ma,
        stationary=bool(np.all(np.abs(ar) > 1.0)),
        invertible=bool(np.all(np.abs(ma) > 1.0)),
    )


def psi_weights(phi: Sequence[float], theta: Sequence[float], horizon: int) -> np.ndarray:
    """Coefficients ``psi_0..psi_horizon`` of ``Theta(B) / Phi(B)``.

    Uses ``psi_j = theta_j + sum_i phi_i psi_{j-i}`` with ``psi_0 = 1``.

    Raises
    ------
    StationarityError
        If the AR polynomial has a root on or inside the unit circle.
    """
    phi = np.asarray(phi, dtype=float).reshape(-1)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if horizon < 0:
        raise ParameterError("horizon must be >= 0")
    rep = check_stationarity(phi, theta)
    if not rep.stationary:
        raise StationarityError(
            f"AR polynomial not invertible; min |root| = {np.min(np.abs(rep.ar_roots)):.6g}")
    psi = np.zeros(horizon + 1)
    psi[0] = 1.0
    for j in range(1, horizon + 1):
        acc = theta[j - 1] if j <= theta.size else 0.0
        for i in range(1, min(j, phi.size) + 1):
            acc += phi[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def arma_autocorrelation(phi, theta, max_lag: int, horizon: int = 2000) -> np.ndarray:
    """Autocorrelations ``rho_0..rho_max_lag`` of a causal ARMA from its psi-weights.

    ``rho_k = sum_i psi_i psi_{i+k} / sum_i psi_i^2``, truncated at ``horizon``
    terms; this is the link-scale autocorrelation of ``h(Y_t)`` under a
    constant conditional variance.
    """
    psi = psi_weights(phi, theta, horizon + max_lag)
    denom = np.dot(psi[: horizon + 1], psi[: horizon + 1])
    return np.array([np.dot(psi[: horizon + 1], psi[k: k + horizon + 1]) / denom
                     for k in range(max_lag + 1)])
