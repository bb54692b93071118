"""Command-line front end: complete toy tensors, run dataset evaluations,
serve top-n recommendations, and run the property-check suites.

Exit codes: 0 success, 1 operational error (bad data, failed checks),
2 usage error.  Dataset paths resolve against --ratings/--users first,
then against the UCTENSOR_DATA environment variable (or --data-root).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import properties
from .balance import SolverConfig, balance
from .datasets import load_jester, load_movielens, load_tensor_text
from .evaluate import (
    BASELINE_KINDS,
    ExperimentConfig,
    baseline_predict,
    convergence_trace,
    run_experiment,
    split_kfold,
    write_trace_csv,
)
from .exceptions import UctensorError, UnknownUserError
from .complete import CompletedTensor
from .persist import load_model, save_model
from .recommend import top_n
from .tensor import MAX_DENSE_CELLS

DATASET_KINDS = ("movielens1m", "movielens10m", "jester2", "tensor")

# conventional file names under the data root
DEFAULT_PATHS = {
    "movielens1m": ("ml-1m/ratings.dat", "ml-1m/users.dat"),
    "movielens10m": ("ml-10m/ratings.dat", None),
    "jester2": ("jester2/jester_ratings.csv", None),
}


def _data_root(args) -> Path:
    return Path(args.data_root or os.environ.get("UCTENSOR_DATA", "data"))


def _resolve_paths(args):
    ratings, users = args.ratings, getattr(args, "users", None)
    if ratings is None:
        default = DEFAULT_PATHS.get(args.dataset)
        if default is None:
            raise UctensorError(f"--ratings is required for dataset kind {args.dataset!r}")
        root = _data_root(args)
        ratings = root / default[0]
        if users is None and default[1] is not None:
            candidate = root / default[1]
            users = candidate if candidate.exists() else None
    return ratings, users


def _load_dataset(args):
    ratings, users = _resolve_paths(args)
    if not Path(ratings).exists():
        raise UctensorError(f"ratings file not found: {ratings}")
    if args.dataset == "movielens1m":
        return load_movielens(ratings, users_path=users, fmt="1m")
    if args.dataset == "movielens10m":
        return load_movielens(ratings, users_path=users, fmt="10m")
    if args.dataset == "jester2":
        return load_jester(ratings)
    raise UctensorError(f"dataset kind {args.dataset!r} is not a ratings dataset")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon, max_sweeps=args.max_sweeps)


def _add_common(p):
    p.add_argument("--epsilon", type=float, default=1e-10, help="stopping rate (default 1e-10)")
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--data-root", default=None, help="overrides $UCTENSOR_DATA (default ./data)")


def cmd_complete(args) -> int:
    tensor = load_tensor_text(args.input)
    k = args.k if args.k is not None else tensor.ndim - 1
    model = balance(tensor, k, _solver_config(args))
    print(f"sweeps={model.sweeps_run} final_residual={model.final_residual:.3e}")
    completed = CompletedTensor(model)
    if args.out:
        if tensor.n_cells > min(MAX_DENSE_CELLS, 10_000_000):
            raise UctensorError(
                f"{tensor.n_cells} cells is too large for a dense listing; use --model-out"
            )
        dense = completed.to_dense()
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("shape " + ",".join(str(s) for s in tensor.shape) + "\n")
            for idx in np.ndindex(*tensor.shape):
                fh.write(",".join(str(i) for i in idx) + f",{float(dense[idx])!r}\n")
        print(f"completed tensor written to {args.out}")
    if args.model_out:
        save_model(args.model_out, model, config={"epsilon": args.epsilon, "k": k})
        print(f"model written to {args.model_out}")
    return 0


def cmd_evaluate(args) -> int:
    dataset = _load_dataset(args)
    categories = tuple(args.features.split(",")) if args.features else ("age", "gender", "occupation")
    config = ExperimentConfig(
        epsilon=args.epsilon,
        max_sweeps=args.max_sweeps,
        n_folds=args.folds,
        seed=args.seed,
        clamp=args.clamp,
        feature_mask=args.feature_mask,
        categories=categories,
        threads=args.threads,
    )
    if args.baseline:
        plan = split_kfold(dataset, args.folds, args.seed)
        report = baseline_predict(dataset, plan, args.baseline)
    else:
        report = run_experiment(dataset, args.mode, config)
    print(report.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json(include_timing=not args.omit_timings))
        print(f"report written to {args.out}")
    if args.trace_out:
        trace = convergence_trace(dataset, args.mode, config)
        write_trace_csv(args.trace_out, trace)
        print(f"convergence trace written to {args.trace_out}")
    return 0


def cmd_recommend(args) -> int:
    shift = 0.0
    users = products = None
    if args.model:
        completed, doc = load_model(args.model)
        shift = doc.get("shift", 0.0)
        users = doc.get("users")  # raw id -> dense index
        products = (
            {dense: raw for raw, dense in doc["products"].items()}
            if doc.get("products")
            else None
        )
    elif args.dataset == "tensor":
        if not args.input:
            raise UctensorError("--input is required for --dataset tensor")
        tensor = load_tensor_text(args.input)
        completed = CompletedTensor(balance(tensor, 1, _solver_config(args)))
    else:
        dataset = _load_dataset(args)
        from .tensor import SparseTensor

        indices = np.stack([dataset.user_index, dataset.product_index], axis=1)
        tensor = SparseTensor(
            (dataset.n_users, dataset.n_products), indices, dataset.shifted_values
        )
        completed = CompletedTensor(balance(tensor, 1, _solver_config(args)))
        shift = dataset.shift
        users = dataset.users
        products = {v: k for k, v in dataset.products.items()}

    raw_user = args.user
    if users is not None:
        key = raw_user if raw_user in users else int(raw_user)
        if key not in users:
            raise UnknownUserError(f"unknown user id {raw_user!r}")
        dense_user = users[key]
    else:
        dense_user = int(raw_user)
        if not 0 <= dense_user < completed.shape[0]:
            raise UnknownUserError(f"unknown user id {raw_user!r}")

    picks = top_n(completed, dense_user, args.top, exclude_observed=args.exclude_observed)
    for rank, pred in enumerate(picks, start=1):
        raw_product = products[pred.product] if products else pred.product
        print(f"{rank}\t{raw_product}\t{pred.rating - shift:.4f}\t{pred.source}")
    return 0


def cmd_check(args) -> int:
    results = properties.run_all(
        seed=args.seed, epsilon=args.epsilon, inject_fault=args.inject_fault
    )
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} property suites passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uctensor",
        description="Unit-consistent tensor completion: balance, complete, evaluate, recommend.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="complete a tensor from the generic text format")
    p.add_argument("--input", required=True, help="tensor file: 'shape d1,d2,...' header then i1,...,value lines")
    p.add_argument("--k", type=int, default=None, help="subtensor dimensionality (default D-1)")
    p.add_argument("--out", default=None, help="write all completed cells in the same format")
    p.add_argument("--model-out", default=None, help="write the trained model JSON")
    _add_common(p)
    p.set_defaults(fn=cmd_complete)

    p = sub.add_parser("evaluate", help="cross-validated RMSE/MAE on a ratings dataset")
    p.add_argument("--dataset", required=True, choices=DATASET_KINDS[:-1])
    p.add_argument("--ratings", default=None)
    p.add_argument("--users", default=None)
    p.add_argument("--mode", choices=("2d", "3d"), default="2d")
    p.add_argument("--features", default=None, help="comma list of age,gender,occup (3d mode)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--clamp", action="store_true", help="clamp predictions to the native range")
    p.add_argument("--feature-mask", choices=("user", "all"), default="user")
    p.add_argument("--baseline", choices=BASELINE_KINDS, default=None,
                   help="run a mean baseline instead of the solver")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.add_argument("--omit-timings", action="store_true",
                   help="zero wall times in the report for byte-stable output")
    p.add_argument("--trace-out", default=None, help="write fold-0 sweep,residual CSV here")
    _add_common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("recommend", help="top-n products for a user")
    p.add_argument("--model", default=None, help="model JSON from 'complete --model-out'")
    p.add_argument("--dataset", choices=DATASET_KINDS, default="tensor")
    p.add_argument("--ratings", default=None)
    p.add_argument("--users", default=None)
    p.add_argument("--input", default=None, help="generic tensor file when --dataset tensor")
    p.add_argument("--user", required=True, help="raw user id")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--exclude-observed", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_recommend)

    p = sub.add_parser("check", help="run the seeded property-check suites")
    p.add_argument("--inject-fault", action="store_true",
                   help="deliberately corrupt one expectation (harness self-test)")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UctensorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
