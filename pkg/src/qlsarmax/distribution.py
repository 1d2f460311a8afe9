"""Quantile-parameterized log-symmetric distribution."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ParameterError
from .kernels import KernelFamily, StandardKernel

__all__ = ["QlsDistribution"]


def _as_kernel(kernel) -> StandardKernel:
    if isinstance(kernel, StandardKernel):
        return kernel
    if isinstance(kernel, KernelFamily):
        return StandardKernel(kernel)
    return StandardKernel(kernel)


class QlsDistribution:
    """Positive law whose ``tau_level`` quantile equals ``quantile_Q``.

    ``log Y = log Q + sqrt(kappa) * (Z - z_tau)`` where ``Z`` has density
    ``xi_nc g(z^2)`` and ``z_tau`` is its ``tau_level`` quantile.  ``Q`` and
    ``kappa`` may be arrays of matching shape (one law per element), which is
    how the likelihood and the residuals use it.

    Parameters
    ----------
    quantile_Q : float or array_like
        Positive quantile parameter.
    kappa : float or array_like
        Positive dispersion (power) parameter.
    tau_level : float
        Quantile level in (0, 1).
    kernel : StandardKernel, KernelFamily or str
    z_tau : float, optional
        Precomputed ``G^{-1}(tau_level)``; recomputed when omitted.
    """

    def __init__(self, quantile_Q, kappa, tau_level: float, kernel, z_tau: float | None = None):
        Q = np.asarray(quantile_Q, dtype=float)
        k = np.asarray(kappa, dtype=float)
        if np.any(~(Q > 0)) or np.any(~np.isfinite(Q)):
            raise ParameterError("quantile parameter Q must be positive and finite")
        if np.any(~(k > 0)) or np.any(~np.isfinite(k)):
            raise ParameterError("kappa must be positive and finite")
        if not 0.0 < tau_level < 1.0:
            raise ParameterError("tau_level must lie in (0, 1)")
        self.kernel = _as_kernel(kernel)
        self.quantile_Q = Q
        self.kappa = k
        self.tau_level = float(tau_level)
        self.z_tau = float(self.kernel.quantile(self.tau_level)) if z_tau is None else float(z_tau)

    def __repr__(self):
        return (f"QlsDistribution(Q={self.quantile_Q}, kappa={self.kappa}, "
                f"tau={self.tau_level}, kernel={self.kernel.family.label})")

    def standardize(self, y):
        """Map ``y`` to the standardized scale: ``(log(y/Q) + sqrt(k) z_tau) / sqrt(k)``."""
        y = np.asarray(y, dtype=float)
        if np.any(~(y > 0)):
            raise ParameterError("QLS support is y > 0")
        sk = np.sqrt(self.kappa)
        return (np.log(y / self.quantile_Q) + sk * self.z_tau) / sk

    def logpdf(self, y):
        z = self.standardize(y)
        y = np.asarray(y, dtype=float)
        return (self.kernel.log_xi_nc + self.kernel.log_g(z * z)
                - 0.5 * np.log(self.kappa) - np.log(y))

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return self.kernel.cdf(self.standardize(y))

    def sf(self, y):
        return self.kernel.sf(self.standardize(y))

    def quantile(self, prob):
        z = self.kernel.quantile(prob)
        return self.quantile_Q * np.exp(np.sqrt(self.kappa) * (z - self.z_tau))

    def sample(self, rng: np.random.Generator, n: int | None = None):
        """Draw variates; ``n`` defaults to the broadcast shape of ``(Q, kappa)``."""
        shape = np.broadcast(self.quantile_Q, self.kappa).shape
        if n is None:
            if shape == ():
                raise ParameterError("n is required for scalar parameters")
            size = int(np.prod(shape))
        else:
            if n < 1:
                raise ParameterError("n must be >= 1")
            size = int(n)
        z = self.kernel.sample(rng, size)
        if n is None:
            z = z.reshape(shape)
        return self.quantile_Q * np.exp(np.sqrt(self.kappa) * (z - self.z_tau))

    # scale / power transforms --------------------------------------------

    def scaled(self, c: float) -> "QlsDistribution":
        """Law of ``c * Y`` for ``c > 0``."""
        if not c > 0:
            raise ParameterError("scale factor must be positive")
        return QlsDistribution(c * self.quantile_Q, self.kappa, self.tau_level, self.kernel, self.z_tau)

    def powered(self, c: float) -> "QlsDistribution":
        """Law of ``Y**c`` for ``c != 0``.

        For negative ``c`` the quantile level flips to ``1 - tau_level``.
        """
        if c == 0:
            raise ParameterError("power must be nonzero")
        tau = self.tau_level if c > 0 else 1.0 - self.tau_level
        return QlsDistribution(self.quantile_Q ** c, c * c * self.kappa, tau, self.kernel)

    def mode_check(self, y) -> np.ndarray:
        """Residual of the mode identity ``r(x^2) x = sqrt(kappa)/2`` at ``y``."""
        x = self.standardize(y)
        return self.kernel.mode_identity_residual(x, float(np.mean(self.kappa)))

    @property
    def median(self):
        return self.quantile(0.5)

    def log_scale_shift(self) -> float:
        """``sqrt(kappa) * z_tau``, the offset between log-median and log-Q."""
        return float(np.sqrt(self.kappa) * self.z_tau) if np.ndim(self.kappa) == 0 else math.nan
