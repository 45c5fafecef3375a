"""Learning-curve experiments comparing query strategies.

For each seed a hidden reward is drawn, a candidate pool is sampled, and a
Poisson-disk-thinned held-out set of comparisons is built with noiseless
answers.  The learner then spends its query budget one comparison at a time,
choosing pairs either by information gain or uniformly at random, receiving
noisy answers, and is scored on held-out accuracy and mean log likelihood at
regular checkpoints.

Randomness is split into named streams derived from (seed, stream id) so the
reward, pool, and test set are identical across methods under the same seed
while responses and subsampling stay independent per method.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.special import log_ndtr, ndtr

from .acquisition import CandidatePool, select_query, select_random_query
from .envs import (
    REWARD_KINDS,
    TrueReward,
    draw_true_reward,
    generate_pool,
    make_environment,
    noiseless_respond,
    oracle_respond,
)
from .errors import InvalidInputError
from .gp import GPPosterior, empty_model, update
from .kernels import KernelConfig, default_anchor, kernel_matrix
from .sampling import SamplerConfig, poisson_disk_sample, poisson_target_sample
from .snapshot import atomic_write_text, save_model, save_pool, save_test_set

METHODS = ("active_gp", "random_gp", "active_linear")

# named rng streams; method-specific streams also mix in the method id
_STREAM_POOL = 0
_STREAM_REWARD = 1
_STREAM_TEST = 2
_STREAM_RESPONSE = 3
_STREAM_SELECT = 4


def stream_rng(seed: int, stream: int, method: str | None = None) -> np.random.Generator:
    """Independent generator for one named stream of one seeded run."""
    entropy = [int(seed), stream]
    if method is not None:
        entropy.append(METHODS.index(method))
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a learning-curve run depends on."""

    environment: str
    method: str
    reward_kind: str = "poly2"
    seeds: tuple[int, ...] = (0,)
    budget: int = 200
    eval_every: int = 5
    sigma: float = 1.0
    theta: float = 1.0
    anchor: tuple[float, ...] | None = None
    jitter: float = 1e-8
    train_pool: int = 500
    test_target: int = 20
    test_radius: float | None = None
    pair_budget: int | None = 50_000
    out_dir: str = "results"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; one of {METHODS}")
        if self.reward_kind not in REWARD_KINDS:
            raise InvalidInputError(f"unknown reward kind {self.reward_kind!r}")
        if self.budget < 1:
            raise InvalidInputError("budget must be >= 1")
        if self.eval_every < 1:
            raise InvalidInputError("eval_every must be >= 1")
        if self.train_pool < 2:
            raise InvalidInputError("train_pool must be >= 2")
        if not self.seeds:
            raise InvalidInputError("need at least one seed")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.anchor is not None:
            object.__setattr__(self, "anchor",
                               tuple(float(a) for a in self.anchor))

    def kernel(self, d: int) -> KernelConfig:
        kind = "linear" if self.method == "active_linear" else "anchored_rbf"
        anchor = default_anchor(d) if self.anchor is None else np.asarray(self.anchor)
        return KernelConfig(kind=kind, theta=self.theta,
                            anchor=anchor, jitter=self.jitter)


@dataclass(frozen=True)
class TestSet:
    """Held-out comparisons with noiseless true answers."""

    points: np.ndarray  # (T, d) normalized features
    pairs: np.ndarray  # (P, 2) indices into points
    responses: np.ndarray  # (P,) true answers
    radius: float


@dataclass(frozen=True)
class LearningCurve:
    """Checkpointed metrics for one (method, seed) run."""

    method: str
    seed: int
    queries: tuple[int, ...]
    accuracy: tuple[float, ...]
    mean_ll: tuple[float, ...]


@dataclass(frozen=True)
class SeedResult:
    """One seed's curve plus the artifacts needed to re-score it."""

    curve: LearningCurve
    model: GPPosterior
    pool: CandidatePool
    test_set: TestSet


def build_test_set(pool: CandidatePool, reward: TrueReward,
                   rng: np.random.Generator, target: int = 20,
                   radius: float | None = None) -> TestSet:
    """Thin the pool to well-spread points and answer all their pairings."""
    if radius is not None:
        idx = poisson_disk_sample(pool.features, SamplerConfig(radius=radius), rng)
        used_radius = radius
    else:
        idx, used_radius = poisson_target_sample(pool.features, target, rng)
    points = pool.features[idx]
    t = points.shape[0]
    if t < 2:
        raise InvalidInputError("test set needs at least two points; lower the radius")
    ii, jj = np.triu_indices(t, k=1)
    responses = np.array([
        noiseless_respond(reward, points[i], points[j]) for i, j in zip(ii, jj)
    ], dtype=int)
    return TestSet(points=points, pairs=np.stack([ii, jj], axis=1),
                   responses=responses, radius=used_radius)


def evaluate(model: GPPosterior, test: TestSet) -> tuple[float, float]:
    """Held-out accuracy and mean log likelihood (nats).

    The predicted answer probability for a pair is Phi of the posterior mean
    difference scaled by the model's own noise.  A probability of exactly
    one half counts as incorrect: the model refused to rank the pair.
    """
    if test.pairs.shape[0] == 0:
        raise InvalidInputError("cannot evaluate on an empty test set")
    mu = kernel_matrix(test.points, model.points, model.kernel) @ model.alpha
    z = (mu[test.pairs[:, 0]] - mu[test.pairs[:, 1]]) / (math.sqrt(2.0) * model.sigma)
    p_first = ndtr(z)
    q = test.responses
    correct = ((p_first > 0.5) & (q == 1)) | ((p_first < 0.5) & (q == 0))
    ll = np.where(q == 1, log_ndtr(z), log_ndtr(-z))
    return float(np.mean(correct)), float(np.mean(ll))


def _checkpoints(budget: int, eval_every: int) -> list[int]:
    marks = [0]
    marks.extend(t for t in range(eval_every, budget + 1, eval_every))
    if budget > 0 and marks[-1] != budget:
        marks.append(budget)
    return marks


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    """One full learning loop for one seed of one method."""
    env = make_environment(config.environment)
    pool = generate_pool(env, config.train_pool, stream_rng(seed, _STREAM_POOL))
    reward = draw_true_reward(config.reward_kind, env.dim,
                              stream_rng(seed, _STREAM_REWARD),
                              sigma=config.sigma)
    test = build_test_set(pool, reward, stream_rng(seed, _STREAM_TEST),
                          target=config.test_target, radius=config.test_radius)
    rng_resp = stream_rng(seed, _STREAM_RESPONSE, config.method)
    rng_sel = stream_rng(seed, _STREAM_SELECT, config.method)

    model = empty_model(config.kernel(env.dim), config.sigma)
    marks = set(_checkpoints(config.budget, config.eval_every))
    queries = [0]
    accs: list[float] = []
    lls: list[float] = []
    acc, ll = evaluate(model, test)
    accs.append(acc)
    lls.append(ll)
    for t in range(1, config.budget + 1):
        if config.method == "random_gp":
            choice = select_random_query(pool, rng_sel, model, config.sigma)
        else:
            choice = select_query(model, pool, config.sigma,
                                  pair_budget=config.pair_budget, rng=rng_sel)
        a = pool.features[choice.i]
        b = pool.features[choice.j]
        response = oracle_respond(reward, a, b, rng_resp)
        model = update(model, a, b, response)
        if t in marks:
            acc, ll = evaluate(model, test)
            queries.append(t)
            accs.append(acc)
            lls.append(ll)
    curve = LearningCurve(method=config.method, seed=seed,
                          queries=tuple(queries), accuracy=tuple(accs),
                          mean_ll=tuple(lls))
    return SeedResult(curve=curve, model=model, pool=pool, test_set=test)


def run_learning_loop(config: ExperimentConfig) -> list[SeedResult]:
    """Run every seed of the configured method."""
    return [run_seed(config, seed) for seed in config.seeds]


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def emit_results(config: ExperimentConfig, results: list[SeedResult],
                 out_dir: str | Path | None = None,
                 artifacts: bool = True) -> Path:
    """Write per-seed curves, the aggregate curve, and a run manifest.

    Every file is written atomically and the content is a pure function of
    the config and results, so rerunning a seeded config reproduces the
    output byte for byte.
    """
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        c = res.curve
        rows = [[q, repr(a), repr(l)]
                for q, a, l in zip(c.queries, c.accuracy, c.mean_ll)]
        atomic_write_text(out / f"{c.method}_seed{c.seed}.csv",
                          _csv_text(["queries", "accuracy", "mean_ll"], rows))
        if artifacts:
            save_model(res.model, out / f"{c.method}_seed{c.seed}_model.txt")
            save_pool(res.pool, out / f"seed{c.seed}_pool.tsv")
            save_test_set(res.test_set.points, res.test_set.pairs,
                          res.test_set.responses, out / f"seed{c.seed}_test.tsv")
    marks = results[0].curve.queries
    acc = np.array([r.curve.accuracy for r in results])
    ll = np.array([r.curve.mean_ll for r in results])
    agg_rows = []
    for k, q in enumerate(marks):
        agg_rows.append([
            q,
            repr(float(acc[:, k].mean())), repr(float(acc[:, k].std(ddof=1) if acc.shape[0] > 1 else 0.0)),
            repr(float(ll[:, k].mean())), repr(float(ll[:, k].std(ddof=1) if ll.shape[0] > 1 else 0.0)),
        ])
    atomic_write_text(
        out / f"{config.method}_aggregate.csv",
        _csv_text(["queries", "accuracy_mean", "accuracy_std",
                   "mean_ll_mean", "mean_ll_std"], agg_rows))
    atomic_write_text(out / "manifest.txt", config_text(config))
    return out


def config_text(config: ExperimentConfig) -> str:
    """Render a config in the key = value file format."""
    lines = ["# learning-curve run configuration"]
    for f in fields(config):
        v = getattr(config, f.name)
        if v is None:
            v = "none"
        elif isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    atomic_write_text(path, config_text(config))


_INT_FIELDS = {"budget", "eval_every", "train_pool", "test_target", "pair_budget"}
_FLOAT_FIELDS = {"sigma", "theta", "jitter", "test_radius"}


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse the key = value config format; unknown keys are rejected."""
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise InvalidInputError(f"{path}:{lineno}: unknown config key {key!r}")
        if key == "seeds":
            kwargs[key] = tuple(int(t) for t in value.split(","))
        elif key == "anchor":
            kwargs[key] = None if value == "none" else tuple(
                float(t) for t in value.split(","))
        elif key in _INT_FIELDS:
            kwargs[key] = None if value == "none" else int(value)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = None if value == "none" else float(value)
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise InvalidInputError(f"{path}: incomplete config: {exc}") from None
