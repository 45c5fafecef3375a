"""Gaussian-process reward model trained on pairwise comparisons.

The latent reward f over feature vectors gets an anchored GP prior (see
kernels.py).  A comparison between items a and b is answered "first" with
probability Phi((f(a) - f(b)) / (sqrt(2) * sigma)), i.e. the responder picks
the larger reward corrupted by Gaussian noise of scale sigma on each item.

Since the likelihood is non-Gaussian the posterior over f at the training
points is approximated at its mode (Laplace): Newton iterations with step
halving find the unique maximum of

    log p(f | data) = sum_i log Phi(s_i * (f[a_i] - f[b_i]) / (sqrt(2) sigma))
                      - 0.5 * f' K^-1 f

where s_i is +1 when the first item won and -1 otherwise.  The curvature W
(negative Hessian of the log likelihood at the mode) defines the Gaussian
approximation with covariance (K^-1 + W)^-1 used for prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve
from scipy.special import log_ndtr

from .errors import (
    DimensionMismatchError,
    FitFailureError,
    InvalidInputError,
    InvalidQueryError,
    NumericalDegeneracyError,
)
from .kernels import KernelConfig, as_points, gram_matrix, kernel_matrix

_SQRT_2PI = math.sqrt(2.0 * math.pi)

MAX_NEWTON_ITERS = 100
MAX_STEP_HALVINGS = 30
GRAD_TOL = 1e-8

# matched duplicate coordinates: max-abs difference at or below this is the
# same training point
DUPLICATE_TOL = 1e-12

# predictive variances dipping below zero by at most this much are clamped
VARIANCE_CLAMP = 1e-9


@dataclass(frozen=True)
class PreferenceDatum:
    """One answered comparison between two training points.

    first, second: indices into the model's point set.
    response: 1 if the first point was preferred, 0 if the second.
    """

    first: int
    second: int
    response: int

    def __post_init__(self):
        if self.first == self.second:
            raise InvalidQueryError("a comparison needs two distinct points")
        if self.first < 0 or self.second < 0:
            raise InvalidInputError("point indices must be non-negative")
        if self.response not in (0, 1):
            raise InvalidInputError(f"response must be 0 or 1, got {self.response!r}")


@dataclass(frozen=True)
class PairPrediction:
    """Joint posterior over the latent reward at two query points."""

    mean: np.ndarray  # shape (2,)
    cov: np.ndarray  # shape (2, 2)


@dataclass(frozen=True)
class GPPosterior:
    """Laplace-approximate posterior, immutable once fitted.

    gram: jittered prior covariance K over the training points.
    mode: posterior mode of the latent rewards.
    curvature: W, negative Hessian of the log likelihood at the mode.
    alpha: K^-1 @ mode, reused for every predictive mean.
    correction: (I + W K)^-1 W, the matrix that converts prior
        cross-covariances into the posterior variance reduction.
    """

    points: np.ndarray
    kernel: KernelConfig
    sigma: float
    data: tuple[PreferenceDatum, ...]
    gram: np.ndarray
    mode: np.ndarray
    curvature: np.ndarray
    alpha: np.ndarray
    correction: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _data_arrays(data: tuple[PreferenceDatum, ...]):
    first = np.array([d.first for d in data], dtype=int)
    second = np.array([d.second for d in data], dtype=int)
    signs = np.array([1.0 if d.response == 1 else -1.0 for d in data])
    return first, second, signs


def _probit_terms(f, first, second, signs, sigma):
    """Per-datum log Phi, pdf/cdf ratio and curvature weight.

    The ratio is computed as exp(log pdf - log cdf), which stays finite far
    into the losing tail where Phi underflows.
    """
    z = signs * (f[first] - f[second]) / (math.sqrt(2.0) * sigma)
    lp = log_ndtr(z)
    ratio = np.exp(-0.5 * z * z - lp) / _SQRT_2PI
    weight = np.maximum(ratio * (z + ratio), 0.0)
    return z, lp, ratio, weight


def log_likelihood(f, data, sigma: float) -> float:
    """Sum of log Phi(s_i * (f[first_i] - f[second_i]) / (sqrt(2) sigma))."""
    f = np.asarray(f, dtype=float)
    data = tuple(data)
    if not data:
        return 0.0
    first, second, signs = _data_arrays(data)
    _validate_indices(first, second, f.shape[0])
    _, lp, _, _ = _probit_terms(f, first, second, signs, sigma)
    return float(lp.sum())


def likelihood_grad_hess(f, data, sigma: float):
    """Gradient of the log likelihood and W, its negative Hessian.

    W is assembled from rank-1 blocks w_i (e_a - e_b)(e_a - e_b)', one per
    comparison, so it is positive semi-definite by construction.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    data = tuple(data)
    grad = np.zeros(n)
    hess_w = np.zeros((n, n))
    if not data:
        return grad, hess_w
    first, second, signs = _data_arrays(data)
    _validate_indices(first, second, n)
    _, _, ratio, weight = _probit_terms(f, first, second, signs, sigma)
    coeff = ratio * signs / (math.sqrt(2.0) * sigma)
    np.add.at(grad, first, coeff)
    np.add.at(grad, second, -coeff)
    w = weight / (2.0 * sigma**2)
    np.add.at(hess_w, (first, first), w)
    np.add.at(hess_w, (second, second), w)
    np.add.at(hess_w, (first, second), -w)
    np.add.at(hess_w, (second, first), -w)
    return grad, hess_w


def _validate_indices(first, second, n):
    if len(first) and (first.max() >= n or second.max() >= n):
        raise InvalidInputError("comparison index out of range for the point set")


def _validate_sigma(sigma: float):
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise InvalidInputError(f"sigma must be finite and > 0, got {sigma}")


def fit(points, data, kernel: KernelConfig, sigma: float = 1.0) -> GPPosterior:
    """Fit the Laplace-approximate posterior from scratch.

    Newton steps maximize the log posterior, halving the step (at most
    MAX_STEP_HALVINGS times) whenever a full step would decrease it.
    Convergence is declared when the max-abs gradient of the log posterior
    drops to GRAD_TOL.  Starting from zeros and a strictly concave objective
    this is deterministic: the same inputs give a bit-identical mode.

    The iteration tracks alpha with mode = gram @ alpha, so the gradient is
    the well-conditioned difference grad_ll - alpha; solving gram^-1 @ mode
    directly would amplify rounding by the prior's condition number and can
    make the tolerance unreachable even at the exact floating-point optimum.
    """
    _validate_sigma(sigma)
    if points is None:
        pts = np.zeros((0, kernel.dim))
    else:
        arr = np.asarray(points, dtype=float)
        if arr.size == 0:
            pts = arr.reshape(0, kernel.dim)
        else:
            pts = as_points(arr, kernel.dim)
    data = tuple(data)
    n = pts.shape[0]
    if data:
        first, second, _ = _data_arrays(data)
        _validate_indices(first, second, n)
    gram = gram_matrix(pts, kernel)

    if n == 0:
        zero_m = np.zeros((0, 0))
        return GPPosterior(pts, kernel, sigma, data, gram, np.zeros(0), zero_m,
                           np.zeros(0), zero_m)

    eye = np.eye(n)
    f = np.zeros(n)
    alpha = np.zeros(n)
    grad_norm = np.inf
    converged = False
    curvature = np.zeros((n, n))
    for _ in range(MAX_NEWTON_ITERS):
        grad_ll, curvature = likelihood_grad_hess(f, data, sigma)
        grad = grad_ll - alpha
        grad_norm = float(np.max(np.abs(grad))) if n else 0.0
        if grad_norm <= GRAD_TOL:
            converged = True
            break
        target = curvature @ f + grad_ll
        delta = solve(eye + curvature @ gram, target, check_finite=False) - alpha
        psi_old = log_likelihood(f, data, sigma) - 0.5 * float(f @ alpha)
        # near the optimum the true objective gain of the last polishing
        # steps is far below the rounding noise of evaluating it, so a step
        # only counts as decreasing when it loses more than that noise floor
        slack = 1e-14 * (1.0 + abs(psi_old))
        step = 1.0
        cand_alpha, cand_f = alpha, f
        for _ in range(MAX_STEP_HALVINGS):
            cand_alpha = alpha + step * delta
            cand_f = gram @ cand_alpha
            psi_new = (log_likelihood(cand_f, data, sigma)
                       - 0.5 * float(cand_f @ cand_alpha))
            if psi_new >= psi_old - slack:
                break
            step *= 0.5
        alpha, f = cand_alpha, cand_f
    if not converged:
        raise FitFailureError(
            f"mode search did not converge in {MAX_NEWTON_ITERS} iterations "
            f"(last gradient norm {grad_norm:.3e})",
            grad_norm=grad_norm,
        )

    correction = solve(eye + curvature @ gram, curvature, check_finite=False)
    correction = 0.5 * (correction + correction.T)
    return GPPosterior(pts, kernel, sigma, data, gram, f, curvature, alpha, correction)


def empty_model(kernel: KernelConfig, sigma: float = 1.0) -> GPPosterior:
    """Posterior with no training points: the prior itself."""
    return fit(None, (), kernel, sigma)


def _check_variance(v: float) -> float:
    if v < 0.0:
        if v < -VARIANCE_CLAMP:
            raise NumericalDegeneracyError(
                f"predictive variance {v:.3e} is more negative than "
                f"the clamp tolerance {-VARIANCE_CLAMP:.1e}")
        return 0.0
    return v


def predict_pair(model: GPPosterior, a, b) -> PairPrediction:
    """Joint posterior mean and covariance of the latent reward at (a, b).

    mean = k_* @ K^-1 f_hat, cov = K_prior - k_* (I + W K)^-1 W k_*'.
    Diagonal entries within VARIANCE_CLAMP below zero are clamped to zero;
    anything lower signals a broken model and raises.  Bit-identical inputs
    share one computation so the joint is exactly degenerate: equal means,
    and difference variance exactly zero.
    """
    ab = np.vstack([as_points(a, model.dim), as_points(b, model.dim)])
    if ab.shape[0] != 2:
        raise DimensionMismatchError("predict_pair expects exactly two vectors")
    if np.array_equal(ab[0], ab[1]):
        one = ab[:1]
        kstar = kernel_matrix(one, model.points, model.kernel)
        prior = float(kernel_matrix(one, one, model.kernel)[0, 0])
        mu = float((kstar @ model.alpha)[0])
        var = _check_variance(prior - float((kstar @ model.correction @ kstar.T)[0, 0]))
        return PairPrediction(mean=np.array([mu, mu]),
                              cov=np.full((2, 2), var))
    kstar = kernel_matrix(ab, model.points, model.kernel)
    prior = kernel_matrix(ab, ab, model.kernel)
    mean = kstar @ model.alpha
    cov = prior - kstar @ model.correction @ kstar.T
    cov = 0.5 * (cov + cov.T)
    for i in range(2):
        cov[i, i] = _check_variance(cov[i, i])
    return PairPrediction(mean=mean, cov=cov)


def _find_point(points: np.ndarray, v: np.ndarray) -> int | None:
    """Index of an existing row matching v within DUPLICATE_TOL, else None."""
    if points.shape[0] == 0:
        return None
    hits = np.where(np.max(np.abs(points - v), axis=1) <= DUPLICATE_TOL)[0]
    return int(hits[0]) if hits.size else None


def update(model: GPPosterior, first, second=None, response=None) -> GPPosterior:
    """Refit with one more comparison; the input model is left untouched.

    Accepts either a PreferenceDatum whose indices refer to the existing
    point set, or two feature vectors plus the response.  New vectors are
    appended; vectors matching an existing point within DUPLICATE_TOL reuse
    its index.  Both members resolving to the same index is rejected.
    """
    if isinstance(first, PreferenceDatum):
        if second is not None or response is not None:
            raise InvalidInputError("pass either a datum or two vectors, not both")
        datum = first
        fi, se, _ = _data_arrays((datum,))
        _validate_indices(fi, se, model.n_points)
        return fit(model.points, model.data + (datum,), model.kernel, model.sigma)

    if response not in (0, 1):
        raise InvalidInputError(f"response must be 0 or 1, got {response!r}")
    a = as_points(first, model.dim)[0]
    b = as_points(second, model.dim)[0]
    points = model.points
    idx_a = _find_point(points, a)
    if idx_a is None:
        points = np.vstack([points, a[None, :]])
        idx_a = points.shape[0] - 1
    idx_b = _find_point(points, b)
    if idx_b is None:
        points = np.vstack([points, b[None, :]])
        idx_b = points.shape[0] - 1
    if idx_a == idx_b:
        raise InvalidQueryError("both members of the comparison are the same point")
    datum = PreferenceDatum(idx_a, idx_b, int(response))
    return fit(points, model.data + (datum,), model.kernel, model.sigma)
