"""Active query selection by expected information gain.

For a candidate comparison between items with joint latent posterior
N((mu1, mu2), Sigma), let g = Var(f1 - f2) = Sigma11 + Sigma22 - 2 Sigma12.
The mutual information between the answer and the latent reward is

    I(q; f) = h(Phi((mu1 - mu2) / sqrt(2 sigma^2 + g))) - m

with h the binary entropy in bits.  The first term is the exact entropy of
the predictive answer distribution.  The second is the expected entropy of
the answer once f is known, approximated in closed form by linearizing
h(Phi(.)) as a squared exponential and integrating it against the Gaussian
over f1 - f2:

    m = sqrt(pi ln2 sigma^2) * exp(-(mu1 - mu2)^2 / (pi ln2 sigma^2 + 2 g))
        / sqrt(pi ln2 sigma^2 + 2 g)

Comparing an item against itself gives h(Phi(0)) = 1 and m = 1, so the
objective is exactly zero: a self-comparison is never informative, and any
strictly positive candidate beats it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import ndtr, xlogy

from .errors import DimensionMismatchError, InvalidInputError
from .gp import GPPosterior, predict_pair
from .kernels import kernel_matrix

_LN2 = math.log(2.0)

DEFAULT_PAIR_BUDGET = 50_000


@dataclass(frozen=True)
class CandidatePool:
    """Items a query may be drawn from.

    features: (M, d) normalized feature vectors.
    provenance: optional (M, p) raw control parameters that produced each
        feature vector, kept so user interfaces can render the trajectory.
    normalizer: optional affine map that produced the normalized features.
    env: optional name of the generating environment.
    """

    features: np.ndarray
    provenance: np.ndarray | None = None
    normalizer: Any = None
    env: str | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2:
            raise DimensionMismatchError(f"features must be (M, d), got {feats.shape}")
        if feats.shape[0] < 2:
            raise InvalidInputError("a pool needs at least two candidates")
        if not np.all(np.isfinite(feats)):
            raise InvalidInputError("pool features must be finite")
        object.__setattr__(self, "features", feats)
        if self.provenance is not None:
            prov = np.asarray(self.provenance, dtype=float)
            if prov.ndim != 2 or prov.shape[0] != feats.shape[0]:
                raise DimensionMismatchError(
                    f"provenance must have one row per feature row, got {prov.shape}")
            object.__setattr__(self, "provenance", prov)

    @property
    def size(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class QueryChoice:
    """A selected comparison: pool indices i < j plus what it scored.

    pair_stats carries (mu1, mu2, g) for the chosen pair so logs can record
    why the pair looked attractive without re-running prediction.
    """

    i: int
    j: int
    objective: float
    pair_stats: tuple[float, float, float]


def _entropy_of_probit(t):
    """h(Phi(t)) in bits, elementwise.

    Both tails are computed directly from the normal cdf so the entropy
    underflows gracefully instead of cancelling to a negative value.
    """
    p = ndtr(t)
    q = ndtr(-np.asarray(t))
    return -(xlogy(p, p) + xlogy(q, q)) / _LN2


def _linearized_cond_entropy(dmu, g, sigma):
    """Closed-form expected answer entropy given f, elementwise in bits."""
    r = math.pi * _LN2 * sigma * sigma
    denom = r + 2.0 * np.asarray(g)
    return np.sqrt(r) * np.exp(-np.square(dmu) / denom) / np.sqrt(denom)


def first_entropy(mu1: float, mu2: float, g: float, sigma: float) -> float:
    """Entropy (bits) of the predicted answer to a candidate comparison."""
    if g < 0.0 or not np.isfinite(g):
        raise InvalidInputError(f"g must be finite and >= 0, got {g}")
    t = (mu1 - mu2) / math.sqrt(2.0 * sigma * sigma + g)
    return float(_entropy_of_probit(t))


def expected_cond_entropy(mu1: float, mu2: float, g: float, sigma: float) -> float:
    """Expected answer entropy (bits) once the latent rewards are known."""
    if g < 0.0 or not np.isfinite(g):
        raise InvalidInputError(f"g must be finite and >= 0, got {g}")
    return float(_linearized_cond_entropy(mu1 - mu2, g, sigma))


def pair_stats(model: GPPosterior, a, b) -> tuple[float, float, float]:
    """Posterior means of both items and the variance of their difference."""
    pred = predict_pair(model, a, b)
    g = pred.cov[0, 0] + pred.cov[1, 1] - 2.0 * pred.cov[0, 1]
    return float(pred.mean[0]), float(pred.mean[1]), max(float(g), 0.0)


def info_gain(model: GPPosterior, a, b, sigma: float) -> float:
    """Information-gain objective for one candidate comparison."""
    mu1, mu2, g = pair_stats(model, a, b)
    return (first_entropy(mu1, mu2, g, sigma)
            - expected_cond_entropy(mu1, mu2, g, sigma))


def _pool_posterior(model: GPPosterior, feats: np.ndarray):
    """Posterior mean vector and covariance matrix over all pool items."""
    kc = kernel_matrix(feats, model.points, model.kernel)
    mu = kc @ model.alpha
    prior = kernel_matrix(feats, feats, model.kernel)
    post = prior - kc @ model.correction @ kc.T
    post = 0.5 * (post + post.T)
    return mu, post


def select_query(model: GPPosterior, pool: CandidatePool, sigma: float,
                 pair_budget: int | None = DEFAULT_PAIR_BUDGET,
                 rng: np.random.Generator | None = None) -> QueryChoice:
    """Best comparison among pool pairs by information gain.

    Scores every unordered pair (i < j), or a uniform subsample of
    pair_budget pairs when the pool is too large; ties break to the
    lexicographically smallest (i, j).  With a fixed model, pool and rng
    state the choice is reproducible bit-exactly.
    """
    m = pool.size
    if m < 2:
        raise InvalidInputError("need at least two pool items to form a comparison")
    if pool.features.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"pool dimension {pool.features.shape[1]} != model dimension {model.dim}")
    ii, jj = np.triu_indices(m, k=1)
    n_pairs = ii.shape[0]
    if pair_budget is not None and n_pairs > pair_budget:
        if rng is None:
            raise InvalidInputError(
                "pair count exceeds pair_budget; pass an rng for subsampling")
        keep = rng.choice(n_pairs, size=pair_budget, replace=False)
        keep.sort()
        ii = ii[keep]
        jj = jj[keep]
    mu, post = _pool_posterior(model, pool.features)
    var = np.diag(post)
    dmu = mu[ii] - mu[jj]
    g = np.clip(var[ii] + var[jj] - 2.0 * post[ii, jj], 0.0, None)
    obj = (_entropy_of_probit(dmu / np.sqrt(2.0 * sigma * sigma + g))
           - _linearized_cond_entropy(dmu, g, sigma))
    best = int(np.argmax(obj))
    return QueryChoice(i=int(ii[best]), j=int(jj[best]),
                       objective=float(obj[best]),
                       pair_stats=(float(mu[ii[best]]), float(mu[jj[best]]),
                                   float(g[best])))


def select_random_query(pool: CandidatePool, rng: np.random.Generator,
                        model: GPPosterior | None = None,
                        sigma: float | None = None) -> QueryChoice:
    """Uniform random unordered pair, the non-active baseline.

    When a model and sigma are supplied the objective field is filled in for
    logging; otherwise it is NaN.
    """
    m = pool.size
    if m < 2:
        raise InvalidInputError("need at least two pool items to form a comparison")
    i, j = sorted(int(v) for v in rng.choice(m, size=2, replace=False))
    if model is not None and sigma is not None:
        stats = pair_stats(model, pool.features[i], pool.features[j])
        obj = (first_entropy(*stats, sigma) - expected_cond_entropy(*stats, sigma))
    else:
        stats = (math.nan, math.nan, math.nan)
        obj = math.nan
    return QueryChoice(i=i, j=j, objective=obj, pair_stats=stats)
