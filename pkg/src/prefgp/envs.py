"""Simulated control tasks, trajectory features, and synthetic responders.

Each environment maps a small box of control parameters to a trajectory
feature vector through a fixed closed form.  Feature vectors are min-max
normalized to the unit box using statistics of the candidate pool they came
from, and the normalizer is frozen for the rest of the session so every
model, query, and metric works in one consistent coordinate system.

Synthetic responders score normalized features with a hidden reward, either
linear or a full degree-2 polynomial, and answer comparisons through the
same noisy channel the learner assumes: prefer the first item when
R(a) - R(b) exceeds a N(0, 2 sigma^2) draw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .acquisition import CandidatePool
from .errors import DimensionMismatchError, InvalidInputError

logger = logging.getLogger(__name__)

ENVIRONMENT_NAMES = ("minigolf2d", "tosser2d", "driver4d")
REWARD_KINDS = ("linear", "poly2")

_GRAVITY = 9.81


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension affine map onto [0, 1], frozen after fitting.

    Dimensions with zero observed span map to zero.  Fitting a second
    normalizer on already-normalized output yields the identity, so
    re-normalizing is a no-op.
    """

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, raw: np.ndarray) -> "Normalizer":
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] < 1:
            raise DimensionMismatchError("normalizer needs a (n, d) array with n >= 1")
        lo = raw.min(axis=0)
        hi = raw.max(axis=0)
        return cls(lo=lo, hi=hi)

    def _span(self) -> np.ndarray:
        span = self.hi - self.lo
        return np.where(span > 0.0, span, 1.0)

    def __call__(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.lo) / self._span()

    def invert(self, normalized: np.ndarray) -> np.ndarray:
        return self.lo + np.asarray(normalized, dtype=float) * self._span()


@dataclass(frozen=True)
class Environment:
    """A parametrized task with a deterministic feature map."""

    name: str
    param_names: tuple[str, ...]
    param_bounds: np.ndarray  # (p, 2) columns lo, hi
    feature_names: tuple[str, ...]
    feature_map: Callable[[np.ndarray], np.ndarray]

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def dim(self) -> int:
        return len(self.feature_names)


def _minigolf_features(params: np.ndarray) -> np.ndarray:
    # the shot itself is the trajectory: features are the controls
    return np.array(params, dtype=float, copy=True)


def _tosser_features(params: np.ndarray) -> np.ndarray:
    angle = params[..., 0]
    speed = params[..., 1]
    # projectile range on flat ground; zero speed never leaves the tosser
    horizontal = speed * speed * np.sin(2.0 * angle) / _GRAVITY
    # spin imparted scales with speed and dies off as the release flattens
    flips = 0.5 * speed * (1.0 + np.cos(2.0 * angle))
    return np.stack([horizontal, flips], axis=-1)


_DRIVER_LANES = np.array([-0.5, 0.0, 0.5])
_DRIVER_OTHER_CAR = np.array([0.1, 0.9])


def _driver_features(params: np.ndarray) -> np.ndarray:
    steer = params[..., 0]
    accel = params[..., 1]
    offset = params[..., 2]
    heading = 0.5 * steer
    speed = 0.75 + 0.25 * accel
    x = 0.5 * offset + speed * np.sin(heading)
    y = speed * np.cos(heading)
    dist_car = np.hypot(x - _DRIVER_OTHER_CAR[0], y - _DRIVER_OTHER_CAR[1])
    dist_lane = np.min(np.abs(x[..., None] - _DRIVER_LANES), axis=-1)
    return np.stack([dist_car, speed, heading, dist_lane], axis=-1)


_ENVIRONMENTS = {
    "minigolf2d": Environment(
        name="minigolf2d",
        param_names=("angle", "speed"),
        param_bounds=np.array([[-math.pi / 3.0, math.pi / 3.0], [0.0, 3.0]]),
        feature_names=("angle", "speed"),
        feature_map=_minigolf_features,
    ),
    "tosser2d": Environment(
        name="tosser2d",
        param_names=("angle", "speed"),
        param_bounds=np.array([[0.0, math.pi / 2.0], [0.0, 3.0]]),
        feature_names=("horizontal_range", "flips"),
        feature_map=_tosser_features,
    ),
    "driver4d": Environment(
        name="driver4d",
        param_names=("steer", "accel", "offset"),
        param_bounds=np.array([[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]),
        feature_names=("dist_to_other_car", "speed", "heading", "dist_to_lane_center"),
        feature_map=_driver_features,
    ),
}


def make_environment(name: str, rng: np.random.Generator | None = None) -> Environment:
    """Look up an environment by name.

    The rng argument is accepted for interface uniformity; the bundled
    environments are fixed closed forms and do not consume randomness.
    """
    del rng
    try:
        return _ENVIRONMENTS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown environment {name!r}; available: {', '.join(ENVIRONMENT_NAMES)}"
        ) from None


def poly2_terms(psi: np.ndarray) -> np.ndarray:
    """Degree <= 2 monomials of psi: 1, each psi_i, then psi_i psi_j (i <= j).

    Quadratic terms are ordered row-major by (i, j): for d = 2 the layout is
    (1, psi1, psi2, psi1^2, psi1 psi2, psi2^2).
    """
    psi = np.asarray(psi, dtype=float)
    single = psi.ndim == 1
    if single:
        psi = psi[None, :]
    n, d = psi.shape
    cols = [np.ones(n)]
    cols.extend(psi[:, i] for i in range(d))
    for i in range(d):
        for j in range(i, d):
            cols.append(psi[:, i] * psi[:, j])
    out = np.stack(cols, axis=-1)
    return out[0] if single else out


def n_poly2_terms(d: int) -> int:
    return 1 + d + d * (d + 1) // 2


@dataclass(frozen=True)
class TrueReward:
    """Hidden scoring function a synthetic responder answers from.

    sigma is the responder's own noise scale: comparisons are answered
    through a N(0, 2 sigma^2) corruption of the score difference.
    """

    kind: str
    dim: int
    weights: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise InvalidInputError(f"unknown reward kind {self.kind!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise InvalidInputError(f"sigma must be finite and > 0, got {self.sigma}")
        w = np.asarray(self.weights, dtype=float)
        expected = self.dim if self.kind == "linear" else n_poly2_terms(self.dim)
        if w.shape != (expected,):
            raise DimensionMismatchError(
                f"{self.kind} reward over {self.dim} features needs {expected} "
                f"weights, got shape {w.shape}")
        object.__setattr__(self, "weights", w)


def draw_true_reward(kind: str, d: int, rng: np.random.Generator,
                     sigma: float = 1.0) -> TrueReward:
    """Sample reward weights i.i.d. standard normal."""
    if kind not in REWARD_KINDS:
        raise InvalidInputError(f"unknown reward kind {kind!r}")
    n = d if kind == "linear" else n_poly2_terms(d)
    return TrueReward(kind=kind, dim=d, weights=rng.standard_normal(n), sigma=sigma)


def evaluate_true_reward(reward: TrueReward, psi: np.ndarray) -> np.ndarray:
    """Score one normalized feature vector or a stack of them."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape[-1] != reward.dim:
        raise DimensionMismatchError(
            f"feature dimension {psi.shape[-1]} != reward dimension {reward.dim}")
    if reward.kind == "linear":
        return psi @ reward.weights
    return poly2_terms(psi) @ reward.weights


def oracle_respond(reward: TrueReward, a, b, rng: np.random.Generator) -> int:
    """Noisy comparison: 1 when R(a) - R(b) beats a N(0, 2 sigma^2) draw."""
    diff = float(evaluate_true_reward(reward, a) - evaluate_true_reward(reward, b))
    noise = rng.normal(0.0, math.sqrt(2.0) * reward.sigma)
    return 1 if diff > noise else 0


def noiseless_respond(reward: TrueReward, a, b) -> int:
    """Deterministic comparison on the true scores; ties go to the first."""
    ra = float(evaluate_true_reward(reward, a))
    rb = float(evaluate_true_reward(reward, b))
    if ra == rb:
        logger.warning("noiseless comparison hit an exact tie; answering 'first'")
        return 1
    return 1 if ra > rb else 0


def generate_pool(env: Environment, size: int, rng: np.random.Generator) -> CandidatePool:
    """Sample control parameters uniformly and normalize their features.

    The min-max normalizer is fitted on this pool and travels with it so
    later feature vectors (queries, grids) can use the same frozen map.
    """
    if size < 2:
        raise InvalidInputError(f"pool size must be >= 2, got {size}")
    lo = env.param_bounds[:, 0]
    hi = env.param_bounds[:, 1]
    params = rng.uniform(lo, hi, size=(size, env.n_params))
    raw = env.feature_map(params)
    normalizer = Normalizer.fit(raw)
    return CandidatePool(features=normalizer(raw), provenance=params,
                         normalizer=normalizer, env=env.name)
