"""Doubly stochastic adversarial training.

Each iteration samples a data batch and a fresh random-feature block (both
seeded by (master_seed, iteration)), takes one gated subgradient step of

    R(f) = 1/2 ||f||^2 + C/n sum_i [1 - y_i f(x_i) + eps' ||f|| - y_i b]_+

and tracks ||f||^2 through an O(1) recursion instead of recomputing it.
All previous coefficient blocks shrink by a common per-iteration factor;
the shrink is applied lazily through per-entry scalar multipliers so an
iteration costs O(n_train * d * block_size) regardless of t.

The running score vector over the training set plays the role of calling
the predictor on the partial model each iteration; the two agree up to
float rounding and the equivalence is pinned by tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .config import Constant, Diminishing, Schedule, TrainConfig
from .errors import InputError, NumericalError
from .features import phi_matrix, sample_block
from .kernels import RBFKernel, epsilon_prime
from .model import Model
from .rng import GENERATOR_ID

logger = logging.getLogger(__name__)

# Slack for the coefficient-bound assertions: products of many float
# factors can exceed the exact bound by a few ulps.
_BOUND_SLACK = 1e-9


def step_size(schedule: Schedule, t: int) -> float:
    """Step size at iteration t (1-based): eta, or theta / t."""
    if t < 1:
        raise InputError(f"iteration index must be >= 1, got {t}")
    if isinstance(schedule, Constant):
        return schedule.eta
    return schedule.theta / t


def floored_norm(norm_sq: float, eps_prime: float, C: float) -> float:
    """Norm used in divisions: max(sqrt(norm_sq), eps'*C)."""
    return max(math.sqrt(max(norm_sq, 0.0)), eps_prime * C)


def shrink_factor(gamma_t: float, eps_prime: float, C: float, norm_f: float, active) -> float:
    """Per-iteration multiplier on all previous coefficients.

    `active` is the fraction of the batch with positive loss (a bool works
    for single-sample steps). The caller must floor norm_f first.
    """
    frac = float(active)
    if not 0.0 <= frac <= 1.0:
        raise InputError(f"active fraction must lie in [0, 1], got {frac}")
    if eps_prime * C > 0.0 and norm_f <= 0.0:
        raise InputError("contract violation: norm_f must be floored (>= eps'*C) before shrinking")
    penalty = 0.0
    if frac > 0.0 and eps_prime * C > 0.0:
        penalty = frac * eps_prime * C / norm_f
    return 1.0 - gamma_t * (1.0 + penalty)


def norm_update(norm_sq: float, s: float, coeff_scale: float, f_t_at_batch: float) -> float:
    """One step of the squared-norm recursion; clamps tiny negatives to 0."""
    out = s * s * norm_sq + 2.0 * s * coeff_scale * f_t_at_batch + coeff_scale * coeff_scale
    return max(out, 0.0)


def batch_indices(master_seed: int, t: int, n: int, batch_size: int) -> np.ndarray:
    """The iteration's i.i.d. data batch, regenerable from (master_seed, t)."""
    return rng.integers_below(master_seed, rng.PURPOSE_BATCH, t, batch_size, n)


class EvalTrace:
    """Requests score snapshots at fixed points during training.

    The trainer maintains scores on `X` incrementally and records
    (iteration, scores, bias) after each checkpoint iteration.
    """

    def __init__(self, X: np.ndarray, checkpoints):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        if self.X.ndim != 2:
            raise InputError(f"trace points must form an (n, d) matrix, got shape {self.X.shape}")
        self.checkpoints = sorted({int(c) for c in checkpoints})
        if any(c < 1 for c in self.checkpoints):
            raise InputError("trace checkpoints must be >= 1")
        self.snapshots: list[tuple[int, np.ndarray, float]] = []


@dataclass
class TrainingStats:
    norm_sq_history: np.ndarray
    active_fractions: np.ndarray
    shrink_factors: np.ndarray
    floor_hits: int = 0
    clamp_events: int = 0
    entry_scales: np.ndarray = field(default_factory=lambda: np.zeros(0))
    entry_gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def coefficient_magnitudes(self) -> np.ndarray:
        """Final |a_t^i| per stored entry: gamma_i times its accumulated shrink."""
        return np.abs(self.entry_gammas * self.entry_scales)


@dataclass
class TrainResult:
    model: Model
    stats: TrainingStats


def validate_training_data(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"training data must be a nonempty (n, d) matrix, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise InputError(f"feature/label count mismatch: {X.shape[0]} vs {y.shape[0]}")
    if not np.isfinite(X).all():
        raise InputError("training features must be finite")
    if X.min() < -1e-9 or X.max() > 1.0 + 1e-9:
        raise InputError("training features must lie in [0, 1]; normalize first")
    labels = np.unique(y)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise InputError(f"labels must be +1 or -1, got values {labels[:10]}")
    return X, y


def train(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    kernel: RBFKernel,
    *,
    trace: EvalTrace | None = None,
    debug: bool = False,
) -> TrainResult:
    """Run the doubly stochastic training loop and return the model.

    With debug=True the loop asserts the per-entry coefficient bounds
    (theta/t for the diminishing schedule, eta for the constant one) at
    every iteration and raises AssertionError on the first violation.
    """
    X, y = validate_training_data(X, y)
    n, d = X.shape
    if cfg.batch_size > n:
        raise InputError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    if trace is not None and trace.X.shape[1] != d:
        raise InputError(f"trace points have dimension {trace.X.shape[1]}, data has {d}")

    eps_prime = epsilon_prime(kernel, cfg.epsilon)
    ec = eps_prime * cfg.C
    diminishing = isinstance(cfg.schedule, Diminishing)

    scores = np.zeros(n)
    trace_scores = np.zeros(trace.X.shape[0]) if trace is not None else None
    trace_marks = set(trace.checkpoints) if trace is not None else ()

    norm_sq = 0.0
    bias = 0.0
    T = cfg.iterations
    raw_alphas: list[np.ndarray] = []
    entry_iters: list[int] = []
    scales = np.empty(T)
    gammas = np.empty(T)
    n_entries = 0

    norm_hist = np.empty(T)
    active_hist = np.empty(T)
    shrink_hist = np.empty(T)
    floor_hits = 0
    clamp_events = 0

    for t in range(1, T + 1):
        gamma_t = step_size(cfg.schedule, t)
        idx = batch_indices(cfg.master_seed, t, n, cfg.batch_size)
        block = sample_block(cfg.master_seed, t, cfg.block_size, d, kernel)

        y_b = y[idx]
        f_b = scores[idx]
        norm_t = math.sqrt(norm_sq)
        losses = 1.0 - y_b * f_b + eps_prime * norm_t - y_b * bias
        active = losses > 0.0
        frac = float(active.mean())

        norm_f = floored_norm(norm_sq, eps_prime, cfg.C)
        if ec > 0.0 and norm_t <= ec:
            floor_hits += 1
        s = shrink_factor(gamma_t, eps_prime, cfg.C, norm_f, frac)
        if s < -1.0:
            logger.warning("shrink factor %.3f clamped to -1 at iteration %d", s, t)
            s = -1.0
            clamp_events += 1

        sum_y_active = float(y_b[active].sum())
        coeff_scale = gamma_t * cfg.C * sum_y_active / cfg.batch_size
        f_bar = float(f_b[active].sum()) / cfg.batch_size
        new_norm_sq = norm_update(norm_sq, s, coeff_scale, f_bar)

        scales[:n_entries] *= s
        new_alpha = None
        if active.any():
            phi_all = phi_matrix(block, X)
            new_alpha = (gamma_t * cfg.C / cfg.batch_size) * (y_b[active] @ phi_all[idx[active]])
            if not np.isfinite(new_alpha).all():
                raise NumericalError("non-finite coefficient block", iteration=t)
            raw_alphas.append(new_alpha)
            entry_iters.append(t)
            scales[n_entries] = 1.0
            gammas[n_entries] = gamma_t
            n_entries += 1
            scores = s * scores + phi_all @ new_alpha
        else:
            scores = s * scores

        if trace is not None:
            if new_alpha is not None:
                trace_scores = s * trace_scores + phi_matrix(block, trace.X) @ new_alpha
            else:
                trace_scores = s * trace_scores

        if cfg.learn_bias:
            bias += gamma_t * cfg.C * sum_y_active / cfg.batch_size

        if not (math.isfinite(new_norm_sq) and math.isfinite(s) and math.isfinite(coeff_scale)):
            raise NumericalError("non-finite training state", iteration=t)
        norm_sq = new_norm_sq

        if debug and n_entries:
            bound = gamma_t if diminishing else cfg.schedule.eta
            magnitudes = np.abs(gammas[:n_entries] * scales[:n_entries])
            worst = float(magnitudes.max())
            limit = bound * (1.0 + _BOUND_SLACK) + 1e-15
            assert worst <= limit, (
                f"coefficient bound violated at iteration {t}: |a|={worst:.6g} > {bound:.6g}"
            )

        norm_hist[t - 1] = norm_sq
        active_hist[t - 1] = frac
        shrink_hist[t - 1] = s

        if trace is not None and t in trace_marks:
            trace.snapshots.append((t, trace_scores.copy(), bias))

    entries = []
    kept_scales = []
    kept_gammas = []
    for i in range(n_entries):
        alpha = raw_alphas[i] * scales[i]
        if np.any(alpha):
            entries.append((entry_iters[i], alpha))
            kept_scales.append(scales[i])
            kept_gammas.append(gammas[i])

    model = Model(
        config=cfg,
        kernel=kernel,
        eps_prime=eps_prime,
        d=d,
        entries=entries,
        norm_sq=norm_sq,
        bias=bias,
        generator_id=GENERATOR_ID,
        norm_history=norm_hist,
    )
    stats = TrainingStats(
        norm_sq_history=norm_hist,
        active_fractions=active_hist,
        shrink_factors=shrink_hist,
        floor_hits=floor_hits,
        clamp_events=clamp_events,
        entry_scales=np.array(kept_scales),
        entry_gammas=np.array(kept_gammas),
    )
    return TrainResult(model=model, stats=stats)
