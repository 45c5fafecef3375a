"""Versioned plain-text snapshots of models, pools, and test sets.

Floats are written with repr, which round-trips doubles exactly, so a
snapshot restored on the same platform reproduces the original object
bit for bit.  Model snapshots store the training set and hyperparameters
and are restored by refitting, which is deterministic; the stored mode is
kept as a cross-check and a load fails loudly if the refit disagrees.

All writers go through an atomic temp-file-and-rename so a crash mid-write
never leaves a torn file behind.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .acquisition import CandidatePool
from .envs import Normalizer, make_environment
from .errors import InvalidInputError
from .gp import GPPosterior, PreferenceDatum, fit
from .kernels import KernelConfig

MODEL_MAGIC = "prefgp-model v1"
POOL_MAGIC = "prefgp-pool v1"
TESTSET_MAGIC = "prefgp-testset v1"

# refit cross-check: stored mode must match the rebuilt one this tightly
_MODE_CHECK_TOL = 1e-8


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to path via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_vector(v: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in v)


def save_model(model: GPPosterior, path: str | Path) -> None:
    """Write a model snapshot: hyperparameters, points, data, and mode."""
    k = model.kernel
    lines = [
        MODEL_MAGIC,
        f"kind {k.kind}",
        f"theta {k.theta!r}",
        f"jitter {k.jitter!r}",
        f"sigma {model.sigma!r}",
        f"anchor {_fmt_vector(k.anchor)}",
        f"n_points {model.n_points}",
        f"dim {model.dim}",
        f"n_data {len(model.data)}",
    ]
    for row in model.points:
        lines.append(f"point {_fmt_vector(row)}")
    for d in model.data:
        lines.append(f"datum {d.first} {d.second} {d.response}")
    for x in model.mode:
        lines.append(f"mode {float(x)!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_header_line(line: str, key: str) -> str:
    if not line.startswith(key + " ") and line != key:
        raise InvalidInputError(f"snapshot is missing the {key!r} field")
    return line[len(key) + 1:]


def load_model(path: str | Path) -> GPPosterior:
    """Rebuild a model from a snapshot by deterministic refit."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise InvalidInputError(f"not a {MODEL_MAGIC!r} snapshot: {path}")
    fields: dict[str, str] = {}
    points: list[list[float]] = []
    data: list[PreferenceDatum] = []
    mode: list[float] = []
    for line in lines[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "point":
            points.append([float(t) for t in rest.split()])
        elif key == "datum":
            f, s, r = rest.split()
            data.append(PreferenceDatum(int(f), int(s), int(r)))
        elif key == "mode":
            mode.append(float(rest))
        else:
            fields[key] = rest
    try:
        kernel = KernelConfig(
            kind=fields["kind"],
            theta=float(fields["theta"]),
            jitter=float(fields["jitter"]),
            anchor=np.array([float(t) for t in fields["anchor"].split()]),
        )
        sigma = float(fields["sigma"])
        n_points = int(fields["n_points"])
        dim = int(fields["dim"])
        n_data = int(fields["n_data"])
    except KeyError as exc:
        raise InvalidInputError(f"snapshot is missing field {exc}") from None
    if len(points) != n_points or len(data) != n_data or len(mode) != n_points:
        raise InvalidInputError("snapshot row counts disagree with its header")
    pts = np.array(points, dtype=float).reshape(n_points, dim)
    model = fit(pts, tuple(data), kernel, sigma)
    stored = np.array(mode)
    if n_points and float(np.max(np.abs(model.mode - stored))) > _MODE_CHECK_TOL:
        raise InvalidInputError(
            "refit mode disagrees with the snapshot beyond tolerance; "
            "the snapshot is corrupt or from an incompatible build")
    return model


def save_pool(pool: CandidatePool, path: str | Path) -> None:
    """Export a pool as delimited text: parameters, raw and normalized features."""
    if pool.normalizer is None or pool.env is None or pool.provenance is None:
        raise InvalidInputError("pool export needs provenance, normalizer, and env")
    env = make_environment(pool.env)
    norm: Normalizer = pool.normalizer
    header = (
        [f"param:{n}" for n in env.param_names]
        + [f"raw:{n}" for n in env.feature_names]
        + [f"norm:{n}" for n in env.feature_names]
    )
    lines = [
        f"# {POOL_MAGIC}",
        f"# env {pool.env}",
        f"# lo {_fmt_vector(norm.lo)}",
        f"# hi {_fmt_vector(norm.hi)}",
        "\t".join(header),
    ]
    raw = norm.invert(pool.features)
    for i in range(pool.size):
        cells = (
            [repr(float(x)) for x in pool.provenance[i]]
            + [repr(float(x)) for x in raw[i]]
            + [repr(float(x)) for x in pool.features[i]]
        )
        lines.append("\t".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_pool(path: str | Path) -> CandidatePool:
    """Rebuild a pool from its export, normalizer included."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"# {POOL_MAGIC}":
        raise InvalidInputError(f"not a {POOL_MAGIC!r} export: {path}")
    env_name = _parse_header_line(lines[1][2:], "env")
    lo = np.array([float(t) for t in _parse_header_line(lines[2][2:], "lo").split()])
    hi = np.array([float(t) for t in _parse_header_line(lines[3][2:], "hi").split()])
    env = make_environment(env_name)
    p, d = env.n_params, env.dim
    params, feats = [], []
    for line in lines[5:]:
        if not line.strip():
            continue
        cells = [float(t) for t in line.split("\t")]
        if len(cells) != p + 2 * d:
            raise InvalidInputError("pool export row width disagrees with its env")
        params.append(cells[:p])
        feats.append(cells[p + d:])
    return CandidatePool(
        features=np.array(feats, dtype=float).reshape(len(feats), d),
        provenance=np.array(params, dtype=float).reshape(len(params), p),
        normalizer=Normalizer(lo=lo, hi=hi),
        env=env_name,
    )


def save_test_set(points: np.ndarray, pairs: np.ndarray, responses: np.ndarray,
                  path: str | Path) -> None:
    """Write held-out comparison rows: response, then both feature vectors."""
    points = np.asarray(points, dtype=float)
    lines = [f"# {TESTSET_MAGIC}", f"# dim {points.shape[1]}"]
    for (i, j), q in zip(pairs, responses):
        lines.append("\t".join(
            [str(int(q))]
            + [repr(float(x)) for x in points[i]]
            + [repr(float(x)) for x in points[j]]
        ))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_test_set(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read comparison rows back as (first_points, second_points, responses)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"# {TESTSET_MAGIC}":
        raise InvalidInputError(f"not a {TESTSET_MAGIC!r} file: {path}")
    d = int(_parse_header_line(lines[1][2:], "dim"))
    first, second, responses = [], [], []
    for line in lines[2:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 1 + 2 * d:
            raise InvalidInputError("test-set row width disagrees with its header")
        responses.append(int(cells[0]))
        vals = [float(t) for t in cells[1:]]
        first.append(vals[:d])
        second.append(vals[d:])
    return (np.array(first, dtype=float).reshape(len(first), d),
            np.array(second, dtype=float).reshape(len(second), d),
            np.array(responses, dtype=int))
