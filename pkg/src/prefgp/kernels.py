"""Covariance functions over normalized feature vectors.

Both kernels are anchored at a reference point ``anchor``: any function drawn
from the prior is pinned to zero there, with zero variance.  Rewards learned
from pairwise comparisons are only identified up to an additive constant, so
pinning one point removes the degeneracy.

``anchored_rbf`` subtracts the product of RBF similarities to the anchor from
a plain squared-exponential:

    k(x, y) = exp(-theta * ||x - y||^2) - exp(-theta * (||x - anchor||^2
                                                        + ||y - anchor||^2))

``linear`` is a dot product of anchor-centered coordinates:

    k(x, y) = (x - anchor) . (y - anchor)

Both remain positive semi-definite and satisfy k(anchor, anchor) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError, InvalidInputError, NumericalDegeneracyError

KERNEL_KINDS = ("anchored_rbf", "linear")

# distance below which two rows are reported as duplicates when a Gram
# factorization fails
_DUPLICATE_REPORT_TOL = 1e-6


def default_anchor(d: int) -> np.ndarray:
    """Center of the unit feature box, the default zero-reward point."""
    if d < 1:
        raise InvalidInputError(f"feature dimension must be >= 1, got {d}")
    return np.full(d, 0.5)


@dataclass(frozen=True)
class KernelConfig:
    """Hyperparameters of an anchored covariance function.

    kind: "anchored_rbf" or "linear".
    theta: inverse squared length-scale of the RBF part (ignored by "linear").
    anchor: point where prior mean and variance are exactly zero.
    jitter: diagonal boost applied to Gram matrices before factorization.
    """

    kind: str = "anchored_rbf"
    theta: float = 1.0
    anchor: np.ndarray = field(default_factory=lambda: default_anchor(2))
    jitter: float = 1e-8

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}")
        if not (self.theta > 0.0 and np.isfinite(self.theta)):
            raise InvalidInputError(f"theta must be finite and > 0, got {self.theta}")
        if self.jitter < 0.0 or not np.isfinite(self.jitter):
            raise InvalidInputError(f"jitter must be finite and >= 0, got {self.jitter}")
        anchor = np.asarray(self.anchor, dtype=float)
        if anchor.ndim != 1 or anchor.size < 1 or not np.all(np.isfinite(anchor)):
            raise InvalidInputError("anchor must be a finite 1-D vector")
        object.__setattr__(self, "anchor", anchor)

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]


def as_points(x, d: int | None = None) -> np.ndarray:
    """Coerce input to a (n, d) float array and validate it.

    Accepts a single vector (promoted to one row) or a stack of rows.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected vectors of shape (n, d), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("feature vectors must be finite")
    if d is not None and arr.shape[1] != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {arr.shape[1]}")
    return arr


def kernel_matrix(x, y, config: KernelConfig) -> np.ndarray:
    """Cross-covariance matrix k(x_i, y_j), without jitter.

    This is the single evaluation path for both kernels; scalar helpers and
    Gram construction route through it so identical inputs always produce
    bit-identical covariances.
    """
    xs = as_points(x, config.dim)
    ys = as_points(y, config.dim)
    if config.kind == "anchored_rbf":
        sq = cdist(xs, ys, "sqeuclidean")
        ax = cdist(xs, config.anchor[None, :], "sqeuclidean")[:, 0]
        ay = cdist(ys, config.anchor[None, :], "sqeuclidean")[:, 0]
        # anchor term as exp(-theta * (ax + ay)): when one argument is the
        # anchor this reduces to the main term exactly, so k is exactly 0
        return np.exp(-config.theta * sq) - np.exp(-config.theta * (ax[:, None] + ay[None, :]))
    cx = xs - config.anchor
    cy = ys - config.anchor
    return cx @ cy.T


def kernel_diag(x, config: KernelConfig) -> np.ndarray:
    """Per-row self-covariance k(x_i, x_i), without forming an (n, n) matrix."""
    xs = as_points(x, config.dim)
    if config.kind == "anchored_rbf":
        ax = cdist(xs, config.anchor[None, :], "sqeuclidean")[:, 0]
        return 1.0 - np.exp(-config.theta * (ax + ax))
    cx = xs - config.anchor
    return np.einsum("ij,ij->i", cx, cx)


def anchored_rbf(x, y, config: KernelConfig) -> float:
    """Anchored squared-exponential covariance between two vectors."""
    if config.kind != "anchored_rbf":
        raise InvalidInputError("config.kind must be 'anchored_rbf'")
    return float(kernel_matrix(x, y, config)[0, 0])


def linear_kernel(x, y, anchor) -> float:
    """Anchor-centered dot-product covariance between two vectors."""
    anchor = np.asarray(anchor, dtype=float)
    cfg = KernelConfig(kind="linear", anchor=anchor)
    return float(kernel_matrix(x, y, cfg)[0, 0])


def kernel_value(x, y, config: KernelConfig) -> float:
    """Scalar covariance under whichever kernel the config selects."""
    return float(kernel_matrix(x, y, config)[0, 0])


def _near_duplicate_pairs(points: np.ndarray) -> list[tuple[int, int]]:
    dist = cdist(points, points)
    n = points.shape[0]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] < _DUPLICATE_REPORT_TOL:
                pairs.append((i, j))
    return pairs


def gram_matrix(points, config: KernelConfig) -> np.ndarray:
    """Jittered Gram matrix over a point set, validated by factorization.

    Adds config.jitter to the diagonal and attempts a Cholesky factorization.
    Failure even with jitter indicates (near-)duplicate rows or a broken
    configuration and raises NumericalDegeneracyError naming the offenders.
    """
    pts = as_points(points, config.dim)
    gram = kernel_matrix(pts, pts, config)
    gram[np.diag_indices_from(gram)] += config.jitter
    if pts.shape[0] == 0:
        return gram
    try:
        cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        dups = _near_duplicate_pairs(pts)
        detail = f" near-duplicate point pairs (indices): {dups}" if dups else ""
        raise NumericalDegeneracyError(
            f"Gram matrix is not positive definite even with jitter={config.jitter};{detail}",
            duplicate_pairs=dups,
        ) from exc
    return gram
