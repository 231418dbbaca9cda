"""Experiment driver and validation harness.

Holds the exact-kernel reference trainer (the oracle the random-feature
path is measured against), k-fold grid search, empirical convergence-rate
measurement, and the robust-accuracy experiment runner that produces the
per-attack report tables.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .attacks import AttackConfig, run_attack
from .config import Constant, TrainConfig
from .data import LabeledDataset, kfold_indices
from .errors import InputError
from .kernels import RBFKernel, epsilon_prime, kernel_matrix
from .model import predict_labels
from .training import EvalTrace, batch_indices, floored_norm, shrink_factor, step_size, train

# Self-imposed budget for the exact-kernel oracle; long runs must opt in.
REFERENCE_ITERATION_BUDGET = 5000


@dataclass
class ReferenceModel:
    """Exact-kernel twin of a trained model: a kernel expansion over the
    training points with exactly tracked norm."""

    kernel: RBFKernel
    config: TrainConfig
    eps_prime: float
    points: np.ndarray
    coefficients: np.ndarray
    bias: float
    norm_sq: float
    shrink_factors: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return kernel_matrix(self.kernel, X, self.points) @ self.coefficients + self.bias


def reference_train(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    kernel: RBFKernel,
    *,
    max_iterations: int = REFERENCE_ITERATION_BUDGET,
    trace: EvalTrace | None = None,
) -> ReferenceModel:
    """Train with exact kernel evaluations instead of random features.

    Shares the data-batch seeds, schedule, gating and shrink rule with the
    random-feature trainer; the function norm is exact (c' K c, updated
    incrementally). Refuses runs past max_iterations: cost is O(n * batch)
    per iteration plus an O(n^2) kernel matrix, so pass an explicit
    max_iterations (or None) to opt into a long oracle run.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if max_iterations is not None and cfg.iterations > max_iterations:
        raise InputError(
            f"reference oracle budget exceeded: {cfg.iterations} iterations > {max_iterations}; "
            "pass max_iterations=None (or a higher cap) to run a long reference anyway"
        )
    if cfg.batch_size > n:
        raise InputError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")

    eps_prime = epsilon_prime(kernel, cfg.epsilon)
    K = kernel_matrix(kernel, X)
    K_eval = kernel_matrix(kernel, trace.X, X) if trace is not None else None
    trace_scores = np.zeros(trace.X.shape[0]) if trace is not None else None
    trace_marks = set(trace.checkpoints) if trace is not None else ()

    c = np.zeros(n)
    v = np.zeros(n)  # v = K @ c, so v[i] = h(x_i)
    bias = 0.0
    norm_sq = 0.0
    shrink_hist = np.empty(cfg.iterations)

    for t in range(1, cfg.iterations + 1):
        gamma_t = step_size(cfg.schedule, t)
        idx = batch_indices(cfg.master_seed, t, n, cfg.batch_size)
        y_b = y[idx]
        h_b = v[idx]
        norm_t = math.sqrt(max(norm_sq, 0.0))
        losses = 1.0 - y_b * h_b + eps_prime * norm_t - y_b * bias
        active = losses > 0.0
        frac = float(active.mean())

        norm_f = floored_norm(norm_sq, eps_prime, cfg.C)
        s = shrink_factor(gamma_t, eps_prime, cfg.C, norm_f, frac)
        s = max(s, -1.0)
        shrink_hist[t - 1] = s

        cols = idx[active]
        w = (gamma_t * cfg.C / cfg.batch_size) * y_b[active]
        if cols.size:
            cross = float(w @ v[cols])
            self_term = float(w @ (K[np.ix_(cols, cols)] @ w))
            norm_sq = s * s * norm_sq + 2.0 * s * cross + self_term
            norm_sq = max(norm_sq, 0.0)
            v = s * v + K[:, cols] @ w
            c *= s
            np.add.at(c, cols, w)
            if trace is not None:
                trace_scores = s * trace_scores + K_eval[:, cols] @ w
        else:
            norm_sq = s * s * norm_sq
            v *= s
            c *= s
            if trace is not None:
                trace_scores = s * trace_scores
        if cfg.learn_bias:
            bias += (gamma_t * cfg.C / cfg.batch_size) * float(y_b[active].sum())
        if trace is not None and t in trace_marks:
            trace.snapshots.append((t, trace_scores.copy(), bias))

    return ReferenceModel(
        kernel=kernel,
        config=cfg,
        eps_prime=eps_prime,
        points=X,
        coefficients=c,
        bias=bias,
        norm_sq=norm_sq,
        shrink_factors=shrink_hist,
    )


@dataclass(frozen=True)
class GridSearchResult:
    C: float
    gamma: float
    table: tuple  # ((C, gamma, mean_accuracy), ...) in grid order


def grid_search(ds: LabeledDataset, grid, folds: int, seed: int, base: TrainConfig) -> GridSearchResult:
    """Pick (C, gamma) maximizing mean k-fold validation accuracy.

    Ties break toward smaller C, then smaller gamma.
    """
    grid = list(grid)
    if not grid:
        raise InputError("grid must be nonempty")
    splits = kfold_indices(ds.n, folds, seed)
    for train_idx, _ in splits:
        if np.unique(ds.labels[train_idx]).size < 2:
            raise InputError("degenerate fold: a training split contains a single class")
    rows = []
    for C, gamma in grid:
        kernel = RBFKernel(gamma=gamma)
        cfg = replace(base, C=C)
        accs = []
        for train_idx, val_idx in splits:
            fold_cfg = replace(cfg, batch_size=min(cfg.batch_size, train_idx.size))
            result = train(ds.features[train_idx], ds.labels[train_idx], fold_cfg, kernel)
            labels = predict_labels(result.model, ds.features[val_idx])
            accs.append(float(np.mean(labels == ds.labels[val_idx])))
        rows.append((float(C), float(gamma), float(np.mean(accs))))
    best = min(rows, key=lambda r: (-r[2], r[0], r[1]))
    return GridSearchResult(C=best[0], gamma=best[1], table=tuple(rows))


def log2_grid(low: int = -3, high: int = 3, step: int = 2) -> list[tuple[float, float]]:
    """The (C, gamma) grid over powers of two in [2^low, 2^high]."""
    exps = list(range(low, high + 1, step))
    return [(2.0**a, 2.0**b) for a in exps for b in exps]


def convergence_slope(trace) -> float:
    """Least-squares slope of log(error) against log(iteration)."""
    trace = list(trace)
    if len(trace) < 10:
        raise InputError(f"need at least 10 trace points, got {len(trace)}")
    t = np.asarray([p[0] for p in trace], dtype=np.float64)
    err = np.asarray([p[1] for p in trace], dtype=np.float64)
    if np.any(err <= 0.0):
        raise InputError("trace errors must be positive for a log-log fit")
    if t.max() / t.min() < 100.0:
        raise InputError("trace must span at least two decades of iterations")
    slope, _ = np.polyfit(np.log(t), np.log(err), 1)
    return float(slope)


def log_checkpoints(start: int, stop: int, count: int = 13) -> list[int]:
    """count log-spaced integer checkpoints from start to stop inclusive."""
    pts = np.unique(np.round(np.geomspace(start, stop, count)).astype(int))
    return [int(p) for p in pts]


def power_of_two_checkpoints(iterations: int) -> list[int]:
    pts = [2**k for k in range(0, iterations.bit_length()) if 2**k <= iterations]
    if pts[-1] != iterations:
        pts.append(iterations)
    return pts


def trial_seed(base_seed: int, trial: int) -> int:
    """Derived master seed for one trial of a repeated experiment."""
    return int(rng.raw_stream(base_seed, rng.PURPOSE_TRIAL, trial, 1)[0] & 0x7FFFFFFFFFFFFFFF)


def robust_accuracy(scorer, X: np.ndarray, y: np.ndarray, attack_cfg: AttackConfig, seed: int = 0) -> float:
    """Accuracy on attacked inputs (attacks see the true labels)."""
    X_adv = run_attack(scorer, X, y, attack_cfg, seed=seed)
    return float(np.mean(predict_labels(scorer, X_adv) == y))


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig  # adversarial (diminishing) variant; natural derives from it
    gamma: float
    attacks: tuple[AttackConfig, ...] = ()
    constant_eta: float | None = None
    trials: int = 1
    slow_attack_subset: int | None = None  # cap CW/ZOO evaluation size
    trace_test_error: bool = False

    def variants(self) -> dict[str, TrainConfig]:
        out = {
            "natural": replace(self.train, epsilon=0.0),
            "adv-diminishing": self.train,
        }
        if self.constant_eta is not None:
            out["adv-constant"] = replace(self.train, schedule=Constant(self.constant_eta))
        return out


@dataclass
class ExperimentReport:
    config_echo: dict
    accuracies: dict  # model -> column -> (mean, std) percentages
    wall_times: dict  # model -> column -> seconds
    traces: dict  # model -> list[(iteration, test_error)]
    partial: bool = False
    notes: list[str] = field(default_factory=list)

    def comparable(self) -> dict:
        """Everything deterministic under a fixed master seed (drops wall times)."""
        return {"accuracies": self.accuracies, "traces": self.traces, "partial": self.partial}


def run_experiment(train_ds: LabeledDataset, test_ds: LabeledDataset, exp: ExperimentConfig) -> ExperimentReport:
    """Train each model variant over `trials` master seeds and score it clean
    and under each configured attack.

    Trial i trains with trial_seed(cfg.master_seed, i); reported numbers are
    mean and standard deviation over trials. Component failures mark the
    report partial instead of aborting the run.
    """
    kernel = RBFKernel(gamma=exp.gamma)
    attack_names = [a.family for a in exp.attacks]
    per_model: dict[str, dict[str, list[float]]] = {}
    times: dict[str, dict[str, float]] = {}
    traces: dict[str, list[tuple[int, float]]] = {}
    notes: list[str] = []
    partial = False

    for name, cfg in exp.variants().items():
        columns: dict[str, list[float]] = {c: [] for c in ["clean", *attack_names]}
        times[name] = {c: 0.0 for c in ["train", "clean", *attack_names]}
        for trial in range(exp.trials):
            cfg_t = replace(cfg, master_seed=trial_seed(cfg.master_seed, trial))
            trace = None
            if exp.trace_test_error and trial == 0:
                trace = EvalTrace(test_ds.features, power_of_two_checkpoints(cfg_t.iterations))
            t0 = time.perf_counter()
            result = train(train_ds.features, train_ds.labels, cfg_t, kernel, trace=trace)
            times[name]["train"] += time.perf_counter() - t0
            scorer = result.model.cached()

            t0 = time.perf_counter()
            clean = float(np.mean(predict_labels(scorer, test_ds.features) == test_ds.labels))
            times[name]["clean"] += time.perf_counter() - t0
            columns["clean"].append(100.0 * clean)

            if trace is not None:
                traces[name] = [
                    (t, float(np.mean(np.where(scores + bias >= 0.0, 1, -1) != test_ds.labels)))
                    for t, scores, bias in trace.snapshots
                ]

            for atk in exp.attacks:
                X_eval, y_eval = test_ds.features, test_ds.labels
                if atk.family in ("cw", "zoo") and exp.slow_attack_subset is not None:
                    X_eval = X_eval[: exp.slow_attack_subset]
                    y_eval = y_eval[: exp.slow_attack_subset]
                t0 = time.perf_counter()
                try:
                    acc = robust_accuracy(scorer, X_eval, y_eval, atk, seed=cfg_t.master_seed)
                    columns[atk.family].append(100.0 * acc)
                except Exception as exc:  # record and continue; report marked partial
                    partial = True
                    notes.append(f"{name}/{atk.family} trial {trial}: {exc}")
                times[name][atk.family] += time.perf_counter() - t0
        per_model[name] = columns

    accuracies = {
        model: {
            col: (float(np.mean(vals)), float(np.std(vals)))
            for col, vals in columns.items()
            if vals
        }
        for model, columns in per_model.items()
    }
    echo = {
        "train": exp.train.to_dict(),
        "gamma": exp.gamma,
        "attacks": [a.family for a in exp.attacks],
        "trials": exp.trials,
        "constant_eta": exp.constant_eta,
        "train_provenance": train_ds.provenance,
        "test_provenance": test_ds.provenance,
    }
    return ExperimentReport(
        config_echo=echo,
        accuracies=accuracies,
        wall_times=times,
        traces=traces,
        partial=partial,
        notes=notes,
    )


def write_report_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "column", "accuracy_mean", "accuracy_std", "seconds"])
        for model, columns in report.accuracies.items():
            for col, (mean, std) in columns.items():
                writer.writerow([model, col, f"{mean:.4f}", f"{std:.4f}", f"{report.wall_times[model].get(col, 0.0):.3f}"])


def write_trace_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "iteration", "test_error"])
        for model, points in report.traces.items():
            for t, err in points:
                writer.writerow([model, t, f"{err:.6f}"])


def format_summary(report: ExperimentReport) -> str:
    """Human-readable accuracy table, one row per model."""
    columns = ["clean"] + [c for c in next(iter(report.accuracies.values()), {}) if c != "clean"]
    lines = []
    header = f"{'model':<18}" + "".join(f"{c:>16}" for c in columns)
    lines.append(header)
    lines.append("-" * len(header))
    for model, cols in report.accuracies.items():
        cells = []
        for c in columns:
            if c in cols:
                mean, std = cols[c]
                cells.append(f"{mean:6.2f} +/- {std:4.2f}")
            else:
                cells.append("-")
        lines.append(f"{model:<18}" + "".join(f"{cell:>16}" for cell in cells))
    if report.partial:
        lines.append("PARTIAL REPORT; failures:")
        lines.extend(f"  {n}" for n in report.notes)
    return "\n".join(lines)
