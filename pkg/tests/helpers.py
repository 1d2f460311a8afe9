"""Shared fixtures for the test suite."""

import numpy as np

from qlsarmax import DesignData, KernelFamily, LikelihoodContext, ModelSpec, StandardKernel

#: one representative parameterization per kernel
KERNELS = [
    KernelFamily("normal"),
    KernelFamily("t", (4,)),
    KernelFamily("pe", (0.5,)),
    KernelFamily("hp", (1,)),
    KernelFamily("sl", (2,)),
    KernelFamily("cn", (0.3, 0.5)),
    KernelFamily("ebs", (0.1,)),
    KernelFamily("ebst", (0.1, 4)),
]
KERNEL_IDS = [k.label for k in KERNELS]

_KERNEL_CACHE = {}


def kernel(fam: KernelFamily) -> StandardKernel:
    if fam not in _KERNEL_CACHE:
        _KERNEL_CACHE[fam] = StandardKernel(fam)
    return _KERNEL_CACHE[fam]


def random_instance(rng, fam, n=60, p=1, q=1, k=1, l=1, tau=0.5):
    """Random data, context and parameter vector for derivative checks."""
    x = rng.random((n, k)) if k else None
    w = rng.random((n, l)) if l else None
    y = np.exp(rng.normal(1.0, 0.6, n))
    data = DesignData.from_arrays(y, x, w)
    spec = ModelSpec(p, q, k, l, tau, fam)
    ctx = LikelihoodContext(spec, data, kernel(fam))
    zeta = np.concatenate([
        rng.normal(1.0, 0.3, 1), rng.normal(0.0, 0.3, k),
        rng.normal(-1.0, 0.3, 1), rng.normal(0.0, 0.3, l),
        rng.uniform(-0.5, 0.5, p), rng.uniform(-0.5, 0.5, q),
    ])
    return ctx, zeta


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return g


#: ``(criterion, passed, detail)`` records printed in the terminal summary
ACCEPTANCE_RESULTS = []


def record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {title} | {detail}"
    ACCEPTANCE_RESULTS.append((number, line))
    print(line)
