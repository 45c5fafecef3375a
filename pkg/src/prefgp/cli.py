"""Command-line entry points: run experiments, score models, export pools, serve."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np
from scipy.special import log_ndtr, ndtr

from .envs import generate_pool, make_environment
from .errors import PrefGPError
from .experiment import emit_results, load_config, run_learning_loop
from .kernels import kernel_matrix
from .snapshot import load_model, load_test_set, save_pool


def _cmd_run(args) -> int:
    config = load_config(args.config)
    failures = []
    results = []
    for seed in config.seeds:
        try:
            from .experiment import run_seed
            results.append(run_seed(config, seed))
        except PrefGPError as exc:
            failures.append((seed, exc))
            print(f"seed {seed} failed: {exc}", file=sys.stderr)
    if results:
        out = emit_results(config, results, out_dir=args.out_dir)
        print(f"wrote results for {len(results)} seed(s) to {out}")
    if failures:
        return 1
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    first, second, responses = load_test_set(args.test)
    mu_first = kernel_matrix(first, model.points, model.kernel) @ model.alpha
    mu_second = kernel_matrix(second, model.points, model.kernel) @ model.alpha
    z = (mu_first - mu_second) / (math.sqrt(2.0) * model.sigma)
    p = ndtr(z)
    correct = ((p > 0.5) & (responses == 1)) | ((p < 0.5) & (responses == 0))
    ll = np.where(responses == 1, log_ndtr(z), log_ndtr(-z))
    print(f"pairs={len(responses)} accuracy={float(correct.mean())!r}"
          f" mean_ll={float(ll.mean())!r}")
    return 0


def _cmd_pool(args) -> int:
    env = make_environment(args.env)
    pool = generate_pool(env, args.size, np.random.default_rng(args.seed))
    save_pool(pool, args.out)
    print(f"wrote {pool.size} candidates to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefgp",
        description="active preference-based reward learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a learning-curve experiment")
    p_run.add_argument("--config", required=True, help="key = value config file")
    p_run.add_argument("--out-dir", default=None,
                       help="override the config's output directory")
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("evaluate", help="score a model snapshot on a test set")
    p_eval.add_argument("--model", required=True, help="model snapshot path")
    p_eval.add_argument("--test", required=True, help="test-set file path")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_pool = sub.add_parser("pool", help="sample a candidate pool and export it")
    p_pool.add_argument("--env", required=True)
    p_pool.add_argument("--size", type=int, required=True)
    p_pool.add_argument("--seed", type=int, required=True)
    p_pool.add_argument("--out", required=True)
    p_pool.set_defaults(func=_cmd_pool)

    p_serve = sub.add_parser("serve", help="serve elicitation sessions over HTTP")
    p_serve.add_argument("--host", default=os.environ.get("PREFGP_HOST", "127.0.0.1"))
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get("PREFGP_PORT", "8000")))
    p_serve.add_argument("--data-dir",
                         default=os.environ.get("PREFGP_DATA_DIR", "sessions"))
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PrefGPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
