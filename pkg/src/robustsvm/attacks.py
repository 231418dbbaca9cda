"""Evasion attacks against a trained scorer: FGSM, PGD, C&W-L2, ZOO-ADAM.

All attacks accept either a single input vector or an (n, d) batch and are
deterministic given (scorer, inputs, labels, config, seed). The white-box
attacks ascend the margin loss 1 - y * f(x) without hinge gating (the
gradient is -y * grad f(x) everywhere); gating would make FGSM a no-op on
confidently correct points. ZOO touches only decision_function, never the
gradient.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InputError

ATTACK_FAMILIES = ("fgsm", "pgd", "cw", "zoo")


@dataclass(frozen=True)
class AttackConfig:
    """Attack family plus its knobs.

    epsilon is the L-infinity budget for FGSM/PGD; pgd_step_size defaults
    to epsilon / 4. The ZOO finite-difference half-width zoo_h defaults to
    1e-4, the smallest step giving stable central differences for inputs
    on a [0, 1] pixel scale; its iteration budget is zoo_iters.
    """

    family: str = "fgsm"
    epsilon: float = 8.0 / 255.0
    pgd_steps: int = 10
    pgd_step_size: float | None = None
    cw_c: float = 10.0
    cw_iters: int = 100
    cw_lr: float = 0.05
    zoo_eta: float = 0.01
    zoo_beta1: float = 0.9
    zoo_beta2: float = 0.999
    zoo_h: float = 1e-4
    zoo_iters: int = 200
    clip_min: float = 0.0
    clip_max: float = 1.0

    def __post_init__(self):
        if self.family not in ATTACK_FAMILIES:
            raise InputError(f"unknown attack family {self.family!r}; supported: {ATTACK_FAMILIES}")
        if self.epsilon < 0.0:
            raise InputError(f"attack epsilon must be nonnegative, got {self.epsilon}")
        if self.pgd_steps < 1 or self.cw_iters < 1 or self.zoo_iters < 1:
            raise InputError("step counts must be >= 1")
        if self.cw_c < 0.0:
            raise InputError(f"cw_c must be nonnegative, got {self.cw_c}")
        if self.clip_min >= self.clip_max:
            raise InputError("clip_min must be below clip_max")

    @property
    def pgd_step(self) -> float:
        return self.epsilon / 4.0 if self.pgd_step_size is None else self.pgd_step_size


def _as_batch(x: np.ndarray, y) -> tuple[np.ndarray, np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    y_arr = np.asarray(y, dtype=np.float64).ravel()
    if single and y_arr.shape[0] != 1:
        raise InputError("a single input needs a single label")
    if not single and y_arr.shape[0] != X.shape[0]:
        raise InputError(f"label count {y_arr.shape[0]} does not match input count {X.shape[0]}")
    if not np.all(np.isin(np.unique(y_arr), (-1.0, 1.0))):
        raise InputError("labels must be +1 or -1")
    return X, y_arr, single


def fgsm(scorer, x, y, cfg: AttackConfig) -> np.ndarray:
    """One full-budget step along the sign of the margin-loss gradient."""
    X, y_arr, single = _as_batch(x, y)
    grad = scorer.input_gradient(X)
    X_adv = X + cfg.epsilon * np.sign(-y_arr[:, None] * grad)
    np.clip(X_adv, cfg.clip_min, cfg.clip_max, out=X_adv)
    return X_adv[0] if single else X_adv


def pgd(scorer, x, y, cfg: AttackConfig) -> np.ndarray:
    """pgd_steps sign-gradient steps projected onto the L-inf ball and the box.

    Starts at the clean input (no random init), so runs are reproducible.
    """
    X0, y_arr, single = _as_batch(x, y)
    lo = np.maximum(X0 - cfg.epsilon, cfg.clip_min)
    hi = np.minimum(X0 + cfg.epsilon, cfg.clip_max)
    X_adv = X0.copy()
    step = cfg.pgd_step
    for _ in range(cfg.pgd_steps):
        grad = scorer.input_gradient(X_adv)
        X_adv = X_adv + step * np.sign(-y_arr[:, None] * grad)
        np.clip(X_adv, lo, hi, out=X_adv)
    return X_adv[0] if single else X_adv


def cw_l2(scorer, x, y, cfg: AttackConfig) -> np.ndarray:
    """Fixed-c C&W-L2: gradient descent on ||delta||^2 + c * max(0, y * f(x + delta)).

    Returns the smallest-distortion iterate that flips the sign, or the
    final iterate if none does. No binary search over c and no tanh
    reparameterization; the box constraint is enforced by clipping.
    """
    X0, y_arr, single = _as_batch(x, y)
    n = X0.shape[0]
    X_adv = X0.copy()
    best = X0.copy()
    best_dist = np.full(n, np.inf)
    found = np.zeros(n, dtype=bool)

    def record(X_cur: np.ndarray) -> None:
        scores = scorer.decision_function(X_cur)
        flipped = y_arr * scores < 0.0
        dist = np.linalg.norm(X_cur - X0, axis=1)
        better = flipped & (dist < best_dist)
        best[better] = X_cur[better]
        best_dist[better] = dist[better]
        found[better] = True

    record(X_adv)
    for _ in range(cfg.cw_iters):
        scores = scorer.decision_function(X_adv)
        hinge_on = (y_arr * scores > 0.0).astype(np.float64)
        grad = 2.0 * (X_adv - X0) + (cfg.cw_c * hinge_on * y_arr)[:, None] * scorer.input_gradient(X_adv)
        X_adv = X_adv - cfg.cw_lr * grad
        np.clip(X_adv, cfg.clip_min, cfg.clip_max, out=X_adv)
        record(X_adv)

    out = np.where(found[:, None], best, X_adv)
    return out[0] if single else out


def zoo_adam(scorer, x, y, cfg: AttackConfig, seed: int = 0) -> np.ndarray:
    """Black-box coordinate descent with ADAM on central-difference gradients.

    Each iteration picks one coordinate per sample (seeded), probes the
    margin loss max(0, y * f(x)) at +/- zoo_h, and applies one ADAM update
    to that coordinate. Only decision_function is queried.
    """
    X0, y_arr, single = _as_batch(x, y)
    n, d = X0.shape
    X_adv = X0.copy()
    m_state = np.zeros((n, d))
    v_state = np.zeros((n, d))
    t_state = np.zeros((n, d))
    coords = rng.integers_below(seed, rng.PURPOSE_ZOO, 0, cfg.zoo_iters * n, d).reshape(cfg.zoo_iters, n)
    rows = np.arange(n)
    adam_eps = 1e-8

    def margin_loss(X_cur: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, y_arr * scorer.decision_function(X_cur))

    for it in range(cfg.zoo_iters):
        j = coords[it]
        base = X_adv[rows, j].copy()
        X_adv[rows, j] = base + cfg.zoo_h
        loss_plus = margin_loss(X_adv)
        X_adv[rows, j] = base - cfg.zoo_h
        loss_minus = margin_loss(X_adv)
        X_adv[rows, j] = base
        g = (loss_plus - loss_minus) / (2.0 * cfg.zoo_h)

        t_state[rows, j] += 1.0
        m_state[rows, j] = cfg.zoo_beta1 * m_state[rows, j] + (1.0 - cfg.zoo_beta1) * g
        v_state[rows, j] = cfg.zoo_beta2 * v_state[rows, j] + (1.0 - cfg.zoo_beta2) * g * g
        t_j = t_state[rows, j]
        m_hat = m_state[rows, j] / (1.0 - cfg.zoo_beta1 ** t_j)
        v_hat = v_state[rows, j] / (1.0 - cfg.zoo_beta2 ** t_j)
        step = base - cfg.zoo_eta * m_hat / (np.sqrt(v_hat) + adam_eps)
        X_adv[rows, j] = np.clip(step, cfg.clip_min, cfg.clip_max)
    return X_adv[0] if single else X_adv


def central_difference(loss, x: np.ndarray, j: int, h: float) -> float:
    """(loss(x + h e_j) - loss(x - h e_j)) / (2 h); exact for quadratics."""
    x_plus = np.array(x, dtype=np.float64)
    x_plus[j] += h
    x_minus = np.array(x, dtype=np.float64)
    x_minus[j] -= h
    return (loss(x_plus) - loss(x_minus)) / (2.0 * h)


def run_attack(scorer, X, y, cfg: AttackConfig, seed: int = 0) -> np.ndarray:
    """Dispatch on cfg.family."""
    if cfg.family == "fgsm":
        return fgsm(scorer, X, y, cfg)
    if cfg.family == "pgd":
        return pgd(scorer, X, y, cfg)
    if cfg.family == "cw":
        return cw_l2(scorer, X, y, cfg)
    return zoo_adam(scorer, X, y, cfg, seed=seed)


DUMP_FIELDS = ("sample_id", "clean_label", "clean_score", "adv_score", "l2_distortion", "linf_distortion", "success")


def attack_records(scorer, X: np.ndarray, y: np.ndarray, X_adv: np.ndarray) -> list[dict]:
    """Per-sample dump rows for an attack result."""
    clean_scores = scorer.decision_function(X)
    adv_scores = scorer.decision_function(X_adv)
    delta = X_adv - X
    rows = []
    for i in range(X.shape[0]):
        rows.append(
            {
                "sample_id": i,
                "clean_label": int(y[i]),
                "clean_score": float(clean_scores[i]),
                "adv_score": float(adv_scores[i]),
                "l2_distortion": float(np.linalg.norm(delta[i])),
                "linf_distortion": float(np.abs(delta[i]).max()) if delta.shape[1] else 0.0,
                "success": int(y[i] * adv_scores[i] < 0.0),
            }
        )
    return rows


def write_attack_dump(path, records: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DUMP_FIELDS)
        writer.writeheader()
        writer.writerows(records)
