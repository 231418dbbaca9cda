"""Command line interface.

Every subcommand reads an optional JSON config file (sections: data, train,
attack, bench; see README for the schema) and applies command-line flags on
top. Exit codes: 0 success, 2 input or data-format error, 3 numerical
failure.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import presets
from .attacks import AttackConfig, attack_records, run_attack, write_attack_dump
from .bench import (
    ExperimentConfig,
    format_summary,
    grid_search,
    log2_grid,
    run_experiment,
    write_report_csv,
    write_trace_csv,
)
from .config import TrainConfig, parse_schedule
from .data import (
    LabeledDataset,
    load_csv,
    load_idx,
    load_manifest,
    resolve_entry,
    select_binary,
    take_per_class,
)
from .errors import InputError, NumericalError
from .kernels import RBFKernel
from .model import Model, predict_labels
from .training import train


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InputError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    return cfg


def _train_config(section: dict, **overrides) -> tuple[TrainConfig, float]:
    merged = dict(section)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    gamma = float(merged.pop("gamma", 1.0))
    if "seed" in merged:
        merged["master_seed"] = int(merged.pop("seed"))
    schedule = merged.get("schedule", "diminishing:1.0")
    if isinstance(schedule, str):
        merged["schedule"] = parse_schedule(schedule)
    known = {"C", "epsilon", "schedule", "batch_size", "block_size", "iterations", "master_seed", "learn_bias"}
    unknown = set(merged) - known
    if unknown:
        raise InputError(f"unknown train config keys: {sorted(unknown)}")
    return TrainConfig(**merged), gamma


def _attack_config(section: dict, family=None, epsilon=None) -> tuple[AttackConfig, int]:
    merged = dict(section)
    if family is not None:
        merged["family"] = family
    if epsilon is not None:
        merged["epsilon"] = epsilon
    seed = int(merged.pop("seed", 0))
    merged.setdefault("family", "fgsm")
    if merged["family"] == "cw_l2":
        merged["family"] = "cw"
    return AttackConfig(**merged), seed


def _load_datasets(section: dict) -> tuple[LabeledDataset, LabeledDataset | None]:
    """Resolve the data section to (train, test-or-None)."""
    classes = section.get("classes", (1, 7))
    test = None
    if "manifest" in section:
        manifest = load_manifest(section["manifest"])
        name = section.get("experiment")
        if name is None:
            raise InputError("data.manifest needs data.experiment")
        train_ds, test = resolve_entry(manifest, name, base_dir=section.get("base_dir"))
    elif "train_images" in section:
        train_ds = select_binary(load_idx(section["train_images"], section["train_labels"]), *classes)
        if "test_images" in section:
            test = select_binary(load_idx(section["test_images"], section["test_labels"]), *classes)
    elif "train_csv" in section:
        col = section.get("label_column", -1)
        train_ds = select_binary(load_csv(section["train_csv"], label_column=col), *classes)
        if "test_csv" in section:
            test = select_binary(load_csv(section["test_csv"], label_column=col), *classes)
    elif "synthetic" in section:
        workdir = section.get("workdir", "bench-data")
        if section["synthetic"] == "digits-1v7":
            train_ds, test = presets.digits_1v7(workdir, seed=int(section.get("seed", 2024)))
        elif section["synthetic"] == "blobs":
            train_ds, test = presets.blobs_dataset(), None
        else:
            raise InputError(f"unknown synthetic dataset {section['synthetic']!r}")
    else:
        raise InputError(
            "data section must name a manifest, an IDX pair, a CSV pair, or a synthetic dataset"
        )
    n_per_class = section.get("n_per_class")
    if n_per_class is not None:
        train_ds = take_per_class(train_ds, int(n_per_class), int(section.get("subset_seed", 0)))
    return train_ds, test


def _require_test(test: LabeledDataset | None) -> LabeledDataset:
    if test is None:
        raise InputError("this command needs a test split (test_images/test_csv or a manifest entry)")
    return test


def _read_feature_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(c) for c in line.split(",")])
            except ValueError:
                if line_no == 1:
                    continue  # header
                raise InputError(f"non-numeric cell in {path} line {line_no}")
    if not rows:
        raise InputError(f"no rows in {path}")
    return np.asarray(rows, dtype=np.float64)


config_option = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file.")
train_flags = [
    click.option("--c", "C", type=float, default=None, help="Regularization trade-off C."),
    click.option("--gamma", type=float, default=None, help="RBF bandwidth."),
    click.option("--epsilon", type=float, default=None, help="Training perturbation budget (L2)."),
    click.option("--schedule", type=str, default=None, help="constant:ETA or diminishing:THETA."),
    click.option("--iterations", type=int, default=None),
    click.option("--batch-size", "batch_size", type=int, default=None),
    click.option("--block-size", "block_size", type=int, default=None),
    click.option("--seed", type=int, default=None, help="Master seed."),
]


def _with(options):
    def deco(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return deco


@click.group()
@click.version_option()
def main():
    """Adversarially robust kernel SVM: train, predict, attack, benchmark."""


@main.command("train")
@config_option
@_with(train_flags)
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="Model file to write.")
@_guarded
def train_cmd(config_path, output, C, gamma, epsilon, schedule, iterations, batch_size, block_size, seed):
    """Fit a model on the configured dataset and save it."""
    cfg_file = _load_config(config_path)
    train_cfg, gamma_val = _train_config(
        cfg_file.get("train", {}),
        C=C, gamma=gamma, epsilon=epsilon, schedule=schedule,
        iterations=iterations, batch_size=batch_size, block_size=block_size, seed=seed,
    )
    train_ds, _ = _load_datasets(cfg_file.get("data", {}))
    result = train(train_ds.features, train_ds.labels, train_cfg, RBFKernel(gamma=gamma_val))
    result.model.save(output)
    acc = float(np.mean(predict_labels(result.model, train_ds.features) == train_ds.labels))
    click.echo(f"trained {len(result.model.entries)} blocks on {train_ds.n} samples "
               f"(train accuracy {100 * acc:.2f}%); model -> {output}")


@main.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--inputs", type=click.Path(exists=True, dir_okay=False), required=True, help="Feature-only CSV.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="CSV of (id, score, label); stdout if omitted.")
@_guarded
def predict_cmd(model_path, inputs, output):
    """Score inputs with a saved model."""
    model = Model.load(model_path)
    X = _read_feature_csv(inputs)
    scores = model.decision_function(X)
    labels = np.where(scores >= 0.0, 1, -1)
    rows = [(i, f"{scores[i]!r}", int(labels[i])) for i in range(X.shape[0])]
    if output is None:
        for row in rows:
            click.echo(f"{row[0]},{row[1]},{row[2]}")
    else:
        with open(output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "score", "label"])
            writer.writerows(rows)
        click.echo(f"scored {X.shape[0]} inputs -> {output}")


@main.command("attack")
@config_option
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--attack", "family", type=click.Choice(["fgsm", "pgd", "cw", "zoo"]), default=None)
@click.option("--epsilon", type=float, default=None, help="Attack budget (L-inf).")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="Adversarial dump CSV.")
@_guarded
def attack_cmd(config_path, model_path, family, epsilon, output):
    """Generate adversarial examples against a saved model on the test split."""
    cfg_file = _load_config(config_path)
    attack_cfg, seed = _attack_config(cfg_file.get("attack", {}), family=family, epsilon=epsilon)
    train_ds, test = _load_datasets(cfg_file.get("data", {}))
    ds = test if test is not None else train_ds
    model = Model.load(model_path)
    scorer = model.cached()
    X_adv = run_attack(scorer, ds.features, ds.labels, attack_cfg, seed=seed)
    records = attack_records(scorer, ds.features, ds.labels, X_adv)
    write_attack_dump(output, records)
    success = sum(r["success"] for r in records)
    click.echo(f"{attack_cfg.family}: {success}/{len(records)} flipped; dump -> {output}")


@main.command("eval")
@config_option
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--attack", "families", type=click.Choice(["fgsm", "pgd", "cw", "zoo"]), multiple=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Report CSV.")
@_guarded
def eval_cmd(config_path, model_path, families, output):
    """Clean and per-attack accuracy of a saved model on the test split."""
    cfg_file = _load_config(config_path)
    train_ds, test = _load_datasets(cfg_file.get("data", {}))
    ds = test if test is not None else train_ds
    model = Model.load(model_path)
    scorer = model.cached()
    rows = [("clean", float(np.mean(predict_labels(scorer, ds.features) == ds.labels)))]
    for family in families:
        attack_cfg, seed = _attack_config(cfg_file.get("attack", {}), family=family)
        X_adv = run_attack(scorer, ds.features, ds.labels, attack_cfg, seed=seed)
        rows.append((family, float(np.mean(predict_labels(scorer, X_adv) == ds.labels))))
    for name, acc in rows:
        click.echo(f"{name:>6}: {100 * acc:6.2f}%")
    if output:
        with open(output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["column", "accuracy"])
            writer.writerows((n, f"{100 * a:.4f}") for n, a in rows)


@main.command("gridsearch")
@config_option
@_with(train_flags)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--grid-log2", "grid_log2", type=str, default="-3:3:2", show_default=True,
              help="low:high:step exponents for both C and gamma.")
@_guarded
def gridsearch_cmd(config_path, folds, grid_log2, C, gamma, epsilon, schedule, iterations, batch_size, block_size, seed):
    """Pick (C, gamma) by k-fold cross validation."""
    cfg_file = _load_config(config_path)
    train_cfg, _ = _train_config(
        cfg_file.get("train", {}),
        C=C, gamma=gamma, epsilon=epsilon, schedule=schedule,
        iterations=iterations, batch_size=batch_size, block_size=block_size, seed=seed,
    )
    train_ds, _ = _load_datasets(cfg_file.get("data", {}))
    try:
        low, high, step = (int(v) for v in grid_log2.split(":"))
    except ValueError:
        raise InputError(f"--grid-log2 must look like -3:3:2, got {grid_log2!r}") from None
    result = grid_search(train_ds, log2_grid(low, high, step), folds, train_cfg.master_seed, train_cfg)
    for c_val, g_val, acc in result.table:
        click.echo(f"C=2^{np.log2(c_val):+.0f} gamma=2^{np.log2(g_val):+.0f}: {100 * acc:.2f}%")
    click.echo(f"best: C={result.C} gamma={result.gamma}")


@main.command("bench")
@config_option
@_with(train_flags)
@click.option("--attack", "families", type=click.Choice(["fgsm", "pgd", "cw", "zoo"]), multiple=True)
@click.option("--trials", type=int, default=None)
@click.option("--outdir", type=click.Path(file_okay=False), default="bench-out", show_default=True)
@_guarded
def bench_cmd(config_path, families, trials, outdir, C, gamma, epsilon, schedule, iterations, batch_size, block_size, seed):
    """Train natural and adversarial variants, attack them, and write reports."""
    cfg_file = _load_config(config_path)
    bench_section = dict(cfg_file.get("bench", {}))
    data_section = cfg_file.get("data", {"synthetic": "digits-1v7"})

    defaults = presets.digits_train_config().to_dict()
    defaults["gamma"] = presets.DIGITS_GAMMA
    defaults.update(cfg_file.get("train", {}))
    train_cfg, gamma_val = _train_config(
        defaults,
        C=C, gamma=gamma, epsilon=epsilon, schedule=schedule,
        iterations=iterations, batch_size=batch_size, block_size=block_size, seed=seed,
    )
    attack_names = list(families) or list(bench_section.get("attacks", ("fgsm", "pgd")))
    attack_cfgs = tuple(_attack_config(cfg_file.get("attack", {}), family=f)[0] for f in attack_names)
    exp = ExperimentConfig(
        train=train_cfg,
        gamma=gamma_val,
        attacks=attack_cfgs,
        constant_eta=bench_section.get("constant_eta", presets.DIGITS_CONSTANT_ETA),
        trials=trials if trials is not None else int(bench_section.get("trials", 3)),
        slow_attack_subset=bench_section.get("slow_attack_subset", 50),
        trace_test_error=True,
    )
    train_ds, test = _load_datasets(data_section)
    report = run_experiment(train_ds, _require_test(test), exp)

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, out / "report.csv")
    write_trace_csv(report, out / "traces.csv")
    summary = format_summary(report)
    (out / "summary.txt").write_text(summary + "\n")
    click.echo(summary)
    click.echo(f"reports -> {out}/report.csv, {out}/traces.csv, {out}/summary.txt")


if __name__ == "__main__":
    main()
