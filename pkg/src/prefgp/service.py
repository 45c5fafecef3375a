"""JSON-over-HTTP preference elicitation sessions.

A session owns a seeded candidate pool for one environment and walks a human
(or a scripted client) through a budget of pairwise comparisons: the next
query is always the information-gain maximizer over the full pool, the
answer updates the model, and a reward surface can be rendered at any point
for two-dimensional feature spaces.

Sessions survive restarts.  The source of truth on disk is a config snapshot
plus an append-only history of answered comparisons; the model itself is
never persisted but rebuilt by replaying the history, which is deterministic
bit for bit.  A pending query is likewise recomputed on demand: selection is
exhaustive (no pair subsampling) so the same model state always yields the
same query.

Endpoint errors use one shape, {"code": ..., "message": ...}, with the
conventional status codes: 404 unknown session, 409 response without a
pending query, 400 anything malformed.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .acquisition import CandidatePool, select_query
from .envs import Environment, generate_pool, make_environment
from .errors import PrefGPError
from .gp import GPPosterior, empty_model, update
from .kernels import KernelConfig, default_anchor, kernel_diag, kernel_matrix

DEFAULT_BUDGET = 15
DEFAULT_POOL_SIZE = 100
MAX_SURFACE_GRID = 512

_CHOICES = ("first", "second")


class ServiceError(Exception):
    """An error with a wire shape: HTTP status plus {code, message}."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    """In-memory state of one elicitation session."""

    meta: dict[str, Any]
    env: Environment
    pool: CandidatePool
    model: GPPosterior
    history: list[tuple[int, int, str, float]] = field(default_factory=list)
    pending: tuple[int, int, float] | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def asked(self) -> int:
        return len(self.history)

    @property
    def status(self) -> str:
        return "complete" if self.asked >= self.meta["budget"] else "active"


def _session_pool(env: Environment, seed: int, size: int) -> CandidatePool:
    # same stream derivation as the experiment pool stream, so a scripted
    # twin of a session can regenerate the identical pool
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    return generate_pool(env, size, rng)


def _fresh_model(meta: dict[str, Any], d: int) -> GPPosterior:
    kernel = KernelConfig(kind="anchored_rbf", theta=meta["theta"],
                          anchor=default_anchor(d), jitter=meta["jitter"])
    return empty_model(kernel, meta["sigma"])


class SessionStore:
    """Disk-backed registry of sessions.

    Layout per session: {data_dir}/{id}/config.json written once at
    creation, and {data_dir}/{id}/history.log with one tab-separated line
    per answered comparison, appended before the model is updated.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    def _session_dir(self, sid: str) -> Path:
        return self.data_dir / sid

    def create(self, env_name: str, seed: int, budget: int, sigma: float,
               theta: float, pool_size: int, jitter: float = 1e-8) -> Session:
        env = make_environment(env_name)
        meta = {
            "id": uuid.uuid4().hex,
            "env": env_name,
            "seed": int(seed),
            "budget": int(budget),
            "sigma": float(sigma),
            "theta": float(theta),
            "jitter": float(jitter),
            "pool_size": int(pool_size),
            "created": time.time(),
        }
        pool = _session_pool(env, seed, pool_size)
        session = Session(meta=meta, env=env, pool=pool,
                          model=_fresh_model(meta, env.dim))
        sdir = self._session_dir(meta["id"])
        sdir.mkdir(parents=True)
        (sdir / "config.json").write_text(json.dumps(meta, sort_keys=True))
        (sdir / "history.log").touch()
        with self._registry_lock:
            self._sessions[meta["id"]] = session
        return session

    def _load(self, sid: str) -> Session:
        sdir = self._session_dir(sid)
        config_path = sdir / "config.json"
        if not config_path.exists():
            raise ServiceError(404, "unknown_session", f"no session {sid!r}")
        meta = json.loads(config_path.read_text())
        env = make_environment(meta["env"])
        pool = _session_pool(env, meta["seed"], meta["pool_size"])
        session = Session(meta=meta, env=env, pool=pool,
                          model=_fresh_model(meta, env.dim))
        for line in (sdir / "history.log").read_text().splitlines():
            if not line.strip():
                continue
            f, s, choice, ts = line.split("\t")
            session.history.append((int(f), int(s), choice, float(ts)))
            a = pool.features[int(f)]
            b = pool.features[int(s)]
            session.model = update(session.model, a, b,
                                   1 if choice == "first" else 0)
        return session

    def get(self, sid: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(sid)
            if session is None:
                session = self._load(sid)
                self._sessions[sid] = session
        return session

    def append_history(self, session: Session, first: int, second: int,
                       choice: str, ts: float) -> None:
        line = f"{first}\t{second}\t{choice}\t{ts!r}\n"
        with open(self._session_dir(session.meta["id"]) / "history.log", "a") as fh:
            fh.write(line)
            fh.flush()


def _candidate_payload(session: Session, index: int) -> dict[str, Any]:
    prov = session.pool.provenance
    params = {}
    if prov is not None:
        params = {name: float(v)
                  for name, v in zip(session.env.param_names, prov[index])}
    features = {name: float(v)
                for name, v in zip(session.env.feature_names,
                                   session.pool.features[index])}
    return {"index": index, "params": params, "features": features}


def _session_payload(session: Session) -> dict[str, Any]:
    m = session.meta
    return {"id": m["id"], "env": m["env"], "seed": m["seed"],
            "budget": m["budget"], "asked": session.asked,
            "status": session.status}


def _require_number(body: dict, key: str, default, minimum=None):
    value = body.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ServiceError(400, "invalid_request", f"{key} must be a number")
    if minimum is not None and value < minimum:
        raise ServiceError(400, "invalid_request", f"{key} must be >= {minimum}")
    return value


def create_app(data_dir: str | Path) -> FastAPI:
    """Build the service app over a session directory."""
    app = FastAPI(title="preference elicitation service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.exception_handler(ServiceError)
    def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(PrefGPError)
    def _package_error(_req: Request, exc: PrefGPError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(default={})):
        env_name = body.get("env", "minigolf2d")
        if not isinstance(env_name, str):
            raise ServiceError(400, "invalid_request", "env must be a string")
        seed = body.get("seed")
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2**32))
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ServiceError(400, "invalid_request", "seed must be an integer")
        budget = int(_require_number(body, "budget", DEFAULT_BUDGET, minimum=0))
        pool_size = int(_require_number(body, "pool_size", DEFAULT_POOL_SIZE, minimum=2))
        sigma = float(_require_number(body, "sigma", 1.0))
        theta = float(_require_number(body, "theta", 1.0))
        if sigma <= 0.0 or theta <= 0.0:
            raise ServiceError(400, "invalid_request", "sigma and theta must be > 0")
        session = store.create(env_name, seed, budget, sigma, theta, pool_size)
        return _session_payload(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _session_payload(store.get(sid))

    @app.get("/sessions/{sid}/query")
    def next_query(sid: str):
        session = store.get(sid)
        with session.lock:
            base = _session_payload(session)
            if session.status == "complete":
                return {"status": "complete", "asked": base["asked"],
                        "budget": base["budget"]}
            if session.pending is None:
                choice = select_query(session.model, session.pool,
                                      session.meta["sigma"], pair_budget=None)
                session.pending = (choice.i, choice.j, choice.objective)
            first, second, objective = session.pending
            return {
                "status": "awaiting_response",
                "asked": base["asked"],
                "budget": base["budget"],
                "objective": objective,
                "first": _candidate_payload(session, first),
                "second": _candidate_payload(session, second),
            }

    @app.post("/sessions/{sid}/response")
    def submit_response(sid: str, body: dict = Body(...)):
        choice = body.get("choice")
        if choice not in _CHOICES:
            raise ServiceError(400, "invalid_choice",
                               f"choice must be one of {_CHOICES}")
        session = store.get(sid)
        with session.lock:
            if session.pending is None:
                raise ServiceError(409, "no_pending_query",
                                   "fetch a query before answering; queries are "
                                   "answered exactly once")
            first, second, _ = session.pending
            ts = time.time()
            store.append_history(session, first, second, choice, ts)
            session.history.append((first, second, choice, ts))
            a = session.pool.features[first]
            b = session.pool.features[second]
            session.model = update(session.model, a, b,
                                   1 if choice == "first" else 0)
            session.pending = None
            return _session_payload(session)

    @app.get("/sessions/{sid}/surface")
    def surface(sid: str, grid: int = 64):
        if grid < 2 or grid > MAX_SURFACE_GRID:
            raise ServiceError(400, "invalid_request",
                               f"grid must be in [2, {MAX_SURFACE_GRID}]")
        session = store.get(sid)
        with session.lock:
            if session.env.dim != 2:
                raise ServiceError(400, "unsupported",
                                   "reward surfaces need a 2-d feature space")
            model = session.model
            axis = np.linspace(0.0, 1.0, grid)
            uu, vv = np.meshgrid(axis, axis, indexing="ij")
            pts = np.stack([uu.ravel(), vv.ravel()], axis=-1)
            kc = kernel_matrix(pts, model.points, model.kernel)
            mu = kc @ model.alpha
            var = kernel_diag(pts, model.kernel) - np.einsum(
                "ij,jk,ik->i", kc, model.correction, kc)
            std = np.sqrt(np.clip(var, 0.0, None))
            norm = session.pool.normalizer
            axes = []
            for k, name in enumerate(session.env.feature_names):
                axes.append({"name": name,
                             "lo": float(norm.lo[k]), "hi": float(norm.hi[k])})
            return {
                "grid": grid,
                "mean": mu.reshape(grid, grid).tolist(),
                "std": std.reshape(grid, grid).tolist(),
                "axes": axes,
            }

    return app
