"""Shared helpers for the test suite.

Independent reference implementations live here so the tests never validate
the package against itself: the normal cdf goes through math.erfc (the
package uses scipy's ndtr), entropies through math.log2, and posterior math
through dense numpy solves.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from prefgp import KernelConfig, PreferenceDatum, TestSet, fit
from prefgp.kernels import kernel_matrix

TestSet.__test__ = False  # a dataclass, not a test case, despite the name


def ref_phi(x: float) -> float:
    """Standard normal cdf via erfc, independent of scipy."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def ref_entropy_bits(p: float) -> float:
    """Binary entropy in bits with the 0 log 0 = 0 convention."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def ref_log_posterior(f, data, kernel_cfg, points, sigma):
    """Exact log posterior: probit log likelihood minus the prior quadratic.

    Uses the same jittered prior covariance the fitter factorizes, but all
    the probability math is recomputed from erfc and a dense solve.
    """
    f = np.asarray(f, dtype=float)
    K = kernel_matrix(points, points, kernel_cfg)
    K[np.diag_indices_from(K)] += kernel_cfg.jitter
    ll = 0.0
    for d in data:
        z = (f[d.first] - f[d.second]) / (math.sqrt(2.0) * sigma)
        if d.response == 0:
            z = -z
        p = ref_phi(z)
        ll += math.log(p) if p > 0.0 else -1e12
    return ll - 0.5 * float(f @ np.linalg.solve(K, f))


def random_problem(rng: np.random.Generator, n_points: int, n_data: int,
                   d: int = 2, kind: str = "anchored_rbf",
                   theta: float = 1.0, sigma: float = 1.0):
    """A random small training problem: points in [0,1]^d plus comparisons."""
    points = rng.uniform(0.0, 1.0, size=(n_points, d))
    kernel = KernelConfig(kind=kind, theta=theta,
                          anchor=np.full(d, 0.5), jitter=1e-8)
    data = []
    for _ in range(n_data):
        i, j = rng.choice(n_points, size=2, replace=False)
        data.append(PreferenceDatum(int(i), int(j), int(rng.integers(0, 2))))
    return points, tuple(data), kernel, sigma


def random_fitted_model(rng: np.random.Generator, n_points: int = 4,
                        n_data: int = 3, d: int = 2, **kw):
    points, data, kernel, sigma = random_problem(rng, n_points, n_data, d, **kw)
    return fit(points, data, kernel, sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
