"""Poisson-disk thinning of a finite candidate set.

Dart throwing over an existing point set: visit candidates one at a time and
accept each one whose Euclidean distance (in normalized feature space) to
every previously accepted point is at least the radius.  The result is
maximal with respect to the visitation order: every rejected candidate is
within the radius of some accepted one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError


@dataclass(frozen=True)
class SamplerConfig:
    """Dart-throwing parameters.

    radius: minimum pairwise distance between accepted points.
    max_attempts: optional cap on consecutive rejections before giving up
        early; None scans the entire candidate set.
    """

    radius: float
    max_attempts: int | None = None

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0.0):
            raise InvalidInputError(f"radius must be finite and > 0, got {self.radius}")
        if self.max_attempts is not None and self.max_attempts < 1:
            raise InvalidInputError("max_attempts must be >= 1 or None")


def _accept_scan(points: np.ndarray, order: np.ndarray, radius: float,
                 max_attempts: int | None) -> np.ndarray:
    accepted: list[int] = []
    rejections_in_a_row = 0
    for idx in order:
        if accepted:
            dmin = cdist(points[idx][None, :], points[accepted]).min()
            if dmin < radius:
                rejections_in_a_row += 1
                if max_attempts is not None and rejections_in_a_row >= max_attempts:
                    break
                continue
        accepted.append(int(idx))
        rejections_in_a_row = 0
    return np.array(accepted, dtype=int)


def _as_point_array(points) -> np.ndarray:
    """Accept a candidate pool or a raw (n, d) array of feature rows."""
    feats = getattr(points, "features", points)
    feats = np.asarray(feats, dtype=float)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise InvalidInputError("need a non-empty (n, d) point array")
    return feats


def poisson_disk_sample(points, config: SamplerConfig,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Indices of an accepted subset, in visitation order.

    Accepts a CandidatePool or a bare point array.  Candidates are visited
    in a random permutation when an rng is given and in listed order
    otherwise, which makes the listed-order variant a deterministic
    hand-checkable reduction.
    """
    points = _as_point_array(points)
    order = rng.permutation(points.shape[0]) if rng is not None else np.arange(points.shape[0])
    return _accept_scan(points, order, config.radius, config.max_attempts)


def poisson_target_sample(points, target: int,
                          rng: np.random.Generator | None = None,
                          iters: int = 40) -> tuple[np.ndarray, float]:
    """Bisect the radius until the accepted count is close to target.

    One visitation order is drawn up front and reused for every probe so the
    search is deterministic given the rng state.  Returns (indices, radius)
    for the probe whose count landed nearest the target, preferring the
    larger radius on ties.
    """
    points = _as_point_array(points)
    if target < 1:
        raise InvalidInputError(f"target must be >= 1, got {target}")
    order = rng.permutation(points.shape[0]) if rng is not None else np.arange(points.shape[0])
    span = float(np.max(cdist(points[:1], points))) if points.shape[0] > 1 else 1.0
    lo, hi = 1e-6, max(2.0 * span, 1e-3)
    best: tuple[int, float, np.ndarray] | None = None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        idx = _accept_scan(points, order, mid, None)
        gap = abs(idx.shape[0] - target)
        if best is None or gap < best[0] or (gap == best[0] and mid > best[1]):
            best = (gap, mid, idx)
        if idx.shape[0] > target:
            lo = mid
        elif idx.shape[0] < target:
            hi = mid
        else:
            lo = mid  # push the radius up while the count holds
    assert best is not None
    return best[2], best[1]
