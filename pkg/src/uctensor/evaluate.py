"""Metrics, the cross-validated experiment runner, sanity baselines, and
convergence diagnostics.

The runner builds one train tensor per fold, balances it (k=1 for the
2-D user x product mode, k=2 for the 3-D user x feature x product mode),
predicts the held-out pairs from inverse-scale products, unshifts, and
reports RMSE/MAE per fold plus mean and standard deviation.  Clamped
metrics (predictions clipped to the native rating range) ride along as a
secondary column.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .balance import SolverConfig, balance
from .datasets import FoldPlan, RatingsDataset, build_tensor_2d, build_tensor_3d, split_kfold
from .exceptions import DidNotConvergeError, EmptyInputError
from .tensor import SparseTensor

BASELINE_KINDS = ("global_mean", "item_mean", "user_mean")
FEATURE_MASK_MODES = ("user", "all")


def _pairs_to_arrays(pairs):
    arr = np.asarray(list(pairs), dtype=np.float64).reshape(-1, 2)
    if len(arr) == 0:
        raise EmptyInputError("no (predicted, truth) pairs")
    return arr[:, 0], arr[:, 1]


def rmse(pairs) -> float:
    """Root mean squared error over (predicted, truth) pairs."""
    pred, truth = _pairs_to_arrays(pairs)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def mae(pairs) -> float:
    """Mean absolute error over (predicted, truth) pairs."""
    pred, truth = _pairs_to_arrays(pairs)
    return float(np.mean(np.abs(pred - truth)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs beyond the dataset itself.  ``feature_mask``
    picks how 3-D test pairs are projected: over the features the user
    actually carries ("user") or the whole feature dimension ("all")."""

    epsilon: float = 1e-10
    max_sweeps: int = 1000
    n_folds: int = 5
    seed: int = 0
    clamp: bool = False
    feature_mask: str = "user"
    categories: tuple = ("age", "gender", "occupation")
    threads: int = 1
    sweep_order: str = "lex"

    def __post_init__(self):
        if self.feature_mask not in FEATURE_MASK_MODES:
            raise ValueError(f"feature_mask must be one of {FEATURE_MASK_MODES}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def solver(self) -> SolverConfig:
        return SolverConfig(
            epsilon=self.epsilon, max_sweeps=self.max_sweeps, sweep_order=self.sweep_order
        )

    def echo(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_sweeps": self.max_sweeps,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "clamp": self.clamp,
            "feature_mask": self.feature_mask,
            "categories": list(self.categories),
            "threads": self.threads,
            "sweep_order": self.sweep_order,
        }


@dataclass
class FoldResult:
    fold: int
    rmse: float
    mae: float
    rmse_clamped: float
    mae_clamped: float
    sweeps: int
    wall_time: float
    cold_pairs: int
    converged: bool
    n_test: int


@dataclass
class EvalReport:
    dataset: str
    mode: str
    categories: list | None
    per_fold: list
    rmse_mean: float
    rmse_std: float
    mae_mean: float
    mae_std: float
    rmse_clamped_mean: float
    rmse_clamped_std: float
    mae_clamped_mean: float
    mae_clamped_std: float
    config: dict

    @classmethod
    def from_folds(cls, dataset, mode, categories, folds, config_echo) -> "EvalReport":
        folds = sorted(folds, key=lambda f: f.fold)

        def stats(attr):
            vals = np.array([getattr(f, attr) for f in folds])
            return float(vals.mean()), float(vals.std())

        rm, rs = stats("rmse")
        mm, ms = stats("mae")
        rcm, rcs = stats("rmse_clamped")
        mcm, mcs = stats("mae_clamped")
        return cls(
            dataset=dataset,
            mode=mode,
            categories=list(categories) if categories is not None else None,
            per_fold=folds,
            rmse_mean=rm,
            rmse_std=rs,
            mae_mean=mm,
            mae_std=ms,
            rmse_clamped_mean=rcm,
            rmse_clamped_std=rcs,
            mae_clamped_mean=mcm,
            mae_clamped_std=mcs,
            config=config_echo,
        )

    def to_dict(self, include_timing: bool = True) -> dict:
        out = asdict(self)
        if not include_timing:
            for fold in out["per_fold"]:
                fold["wall_time"] = 0.0
        return out

    def to_json(self, include_timing: bool = True, indent: int = 2) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing), indent=indent)

    def summary(self) -> str:
        return (
            f"{self.dataset} {self.mode}: "
            f"RMSE {self.rmse_mean:.4f} ± {self.rmse_std:.4f}, "
            f"MAE {self.mae_mean:.4f} ± {self.mae_std:.4f} "
            f"({len(self.per_fold)} folds)"
        )


def _metrics(preds_native, truth_native, dataset, clamp_primary):
    lo, hi = dataset.native_range
    clamped = np.clip(preds_native, lo, hi)
    primary = clamped if clamp_primary else preds_native
    pairs = list(zip(primary, truth_native))
    pairs_clamped = list(zip(clamped, truth_native))
    return rmse(pairs), mae(pairs), rmse(pairs_clamped), mae(pairs_clamped)


def _solve(tensor: SparseTensor, k: int, config: ExperimentConfig):
    t0 = time.perf_counter()
    try:
        model = balance(tensor, k, config.solver())
        converged = True
    except DidNotConvergeError as exc:  # keep going with the partial model
        model = exc.model
        converged = False
    return model, converged, time.perf_counter() - t0


def _fold_2d(dataset, fold_plan, fold, config) -> FoldResult:
    tensor, pairs = build_tensor_2d(dataset, fold_plan, fold)
    model, converged, wall = _solve(tensor, 1, config)

    idx = np.array([(u, p) for u, p, _ in pairs], dtype=np.int64).reshape(-1, 2)
    truth_shifted = np.array([t for _, _, t in pairs])
    preds_shifted = np.exp(-model.scales.log_sum_at(idx))
    cold = int(model.scales.empty_key_mask(idx).sum())

    preds_native = preds_shifted - dataset.shift
    truth_native = truth_shifted - dataset.shift
    r, m, rc, mc = _metrics(preds_native, truth_native, dataset, config.clamp)
    return FoldResult(fold, r, m, rc, mc, model.sweeps_run, wall, cold, converged, len(pairs))


def _fold_3d(dataset, fold_plan, fold, config) -> FoldResult:
    tensor, mask = build_tensor_3d(dataset, config.categories, fold_plan, fold)
    model, converged, wall = _solve(tensor, 2, config)

    n_features = tensor.shape[1]
    users = np.array([u for u, _, _, _ in mask], dtype=np.int64)
    prods = np.array([p for _, p, _, _ in mask], dtype=np.int64)
    truth_shifted = np.array([t for _, _, t, _ in mask])
    if config.feature_mask == "all":
        feats = np.broadcast_to(np.arange(n_features, dtype=np.int64), (len(mask), n_features))
    else:
        feats = np.array([f for _, _, _, f in mask], dtype=np.int64).reshape(len(mask), -1)
    n_cand = feats.shape[1]

    idx = np.empty((len(mask) * n_cand, 3), dtype=np.int64)
    idx[:, 0] = np.repeat(users, n_cand)
    idx[:, 1] = feats.reshape(-1)
    idx[:, 2] = np.repeat(prods, n_cand)
    fills = np.exp(-model.scales.log_sum_at(idx)).reshape(len(mask), n_cand)
    weak = model.scales.empty_key_mask(idx).reshape(len(mask), n_cand)

    best = fills.argmax(axis=1)
    rows = np.arange(len(mask))
    preds_shifted = fills[rows, best]
    cold = int(weak[rows, best].sum())

    preds_native = preds_shifted - dataset.shift
    truth_native = truth_shifted - dataset.shift
    r, m, rc, mc = _metrics(preds_native, truth_native, dataset, config.clamp)
    return FoldResult(fold, r, m, rc, mc, model.sweeps_run, wall, cold, converged, len(mask))


def run_experiment(dataset: RatingsDataset, mode: str, config: ExperimentConfig) -> EvalReport:
    """Full cross-validated run; per-fold non-convergence is recorded, not
    fatal.  Folds are independent and may run on a thread pool; results are
    aggregated in fold order either way."""
    mode = mode.lower()
    if mode not in ("2d", "3d"):
        raise ValueError(f"mode must be '2d' or '3d', got {mode!r}")
    fold_plan = split_kfold(dataset, config.n_folds, config.seed)
    fold_fn = _fold_2d if mode == "2d" else _fold_3d

    folds = range(config.n_folds)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda f: fold_fn(dataset, fold_plan, f, config), folds))
    else:
        results = [fold_fn(dataset, fold_plan, f, config) for f in folds]

    categories = config.categories if mode == "3d" else None
    return EvalReport.from_folds(dataset.name, mode, categories, results, config.echo())


def baseline_predict(dataset: RatingsDataset, fold_plan: FoldPlan, kind: str) -> EvalReport:
    """Constant/mean predictors evaluated exactly like the real runs; a
    sanity anchor, not a contender."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"kind must be one of {BASELINE_KINDS}, got {kind!r}")
    results = []
    for fold in range(fold_plan.n_folds):
        test = fold_plan.test_mask(fold)
        train = ~test
        t0 = time.perf_counter()
        r_train = dataset.rating_values[train]
        global_mean = float(r_train.mean())
        if kind == "global_mean":
            preds = np.full(int(test.sum()), global_mean)
            cold = 0
        else:
            axis = dataset.product_index if kind == "item_mean" else dataset.user_index
            size = dataset.n_products if kind == "item_mean" else dataset.n_users
            sums = np.bincount(axis[train], weights=r_train, minlength=size)
            counts = np.bincount(axis[train], minlength=size)
            means = np.where(counts > 0, sums / np.maximum(counts, 1), global_mean)
            preds = means[axis[test]]
            cold = int((counts[axis[test]] == 0).sum())
        wall = time.perf_counter() - t0
        truth = dataset.rating_values[test]
        r, m, rc, mc = _metrics(preds, truth, dataset, clamp_primary=False)
        results.append(FoldResult(fold, r, m, rc, mc, 0, wall, cold, True, int(test.sum())))
    echo = {"kind": kind, "n_folds": fold_plan.n_folds, "seed": fold_plan.seed}
    return EvalReport.from_folds(dataset.name, f"baseline:{kind}", None, results, echo)


def convergence_trace(dataset: RatingsDataset, mode: str, config: ExperimentConfig) -> list:
    """Per-sweep residuals of the first fold's solve (for plotting)."""
    mode = mode.lower()
    fold_plan = split_kfold(dataset, config.n_folds, config.seed)
    if mode == "2d":
        tensor, _ = build_tensor_2d(dataset, fold_plan, 0)
        k = 1
    elif mode == "3d":
        tensor, _ = build_tensor_3d(dataset, config.categories, fold_plan, 0)
        k = 2
    else:
        raise ValueError(f"mode must be '2d' or '3d', got {mode!r}")
    model, _, _ = _solve(tensor, k, config)
    return list(model.residual_trace)


def write_trace_csv(path, trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sweep,residual\n")
        for i, v in enumerate(trace, start=1):
            fh.write(f"{i},{v!r}\n")
