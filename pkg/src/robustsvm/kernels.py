"""Stationary kernel evaluation, the input-to-kernel-space budget map, and
the worst-case hinge loss that the trainer and the test oracles share.

Only the RBF family is implemented. The norm substitution the trainer relies
on (function norm equals weight norm) needs unit-length feature maps, which
RBF satisfies; the family enumeration leaves room for Laplacian later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

KERNEL_FAMILIES = ("rbf",)


@dataclass(frozen=True)
class RBFKernel:
    """k(x, x') = exp(-gamma * ||x - x'||^2); radial with f(c) = exp(-gamma c^2), f(0) = 1."""

    gamma: float
    family: str = "rbf"

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; supported: {KERNEL_FAMILIES}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise InputError(f"gamma must be a positive finite real, got {self.gamma}")

    def radial(self, c: float) -> float:
        """f(c): kernel value at distance c."""
        return math.exp(-self.gamma * c * c)


@dataclass(frozen=True)
class AdversarialBudget:
    """Paired input-space radius and its image in kernel space.

    Immutable: build a new budget when epsilon or the kernel changes, so the
    kernel-space radius can never go stale.
    """

    epsilon: float
    epsilon_prime: float

    @classmethod
    def for_kernel(cls, kernel: RBFKernel, epsilon: float) -> "AdversarialBudget":
        return cls(epsilon=float(epsilon), epsilon_prime=epsilon_prime(kernel, epsilon))


def kernel_eval(kernel: RBFKernel, x: np.ndarray, x2: np.ndarray) -> float:
    """Exact kernel value; the test oracle the random-feature path is checked against."""
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    diff = x - x2
    return math.exp(-kernel.gamma * float(diff @ diff))


def kernel_matrix(kernel: RBFKernel, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Pairwise kernel values, exact. O(n*m*d); meant for desk-scale oracles."""
    X = np.asarray(X, dtype=np.float64)
    X2 = X if X2 is None else np.asarray(X2, dtype=np.float64)
    if X.ndim != 2 or X2.ndim != 2 or X.shape[1] != X2.shape[1]:
        raise InputError(f"expected matrices with equal column counts, got {X.shape} and {X2.shape}")
    sq = (X * X).sum(axis=1)[:, None] + (X2 * X2).sum(axis=1)[None, :] - 2.0 * (X @ X2.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-kernel.gamma * sq)


def epsilon_prime(kernel: RBFKernel, epsilon: float) -> float:
    """Map an input-space L2 radius to the kernel-space radius sqrt(2 f(0) - 2 f(eps)).

    Monotone increasing in epsilon, zero at zero, and strictly below
    sqrt(2 f(0)) for RBF.
    """
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise InputError(f"epsilon must be a nonnegative finite real, got {epsilon}")
    if epsilon == 0.0:
        return 0.0
    return math.sqrt(max(2.0 - 2.0 * kernel.radial(epsilon), 0.0))


def regularized_hinge(f_x: float, norm_f: float, y: float, eps_prime: float, b: float = 0.0) -> float:
    """Closed-form worst-case hinge: max(0, 1 - y f(x) + eps' ||f|| - y b).

    Equals the plain hinge when eps_prime is 0 and b is 0.
    """
    if y not in (1, -1, 1.0, -1.0):
        raise InputError(f"label must be +1 or -1, got {y}")
    if norm_f < 0.0:
        raise InputError(f"norm_f must be nonnegative, got {norm_f}")
    return max(0.0, 1.0 - y * f_x + eps_prime * norm_f - y * b)


def worst_case_perturbation(w: np.ndarray, y: float, eps_prime: float) -> np.ndarray:
    """The kernel-space perturbation attaining the worst-case hinge: -y eps' w / ||w||.

    Used as the analytic-maximizer oracle when testing the closed form above.
    """
    if y not in (1, -1, 1.0, -1.0):
        raise InputError(f"label must be +1 or -1, got {y}")
    w = np.asarray(w, dtype=np.float64)
    if eps_prime == 0.0:
        return np.zeros_like(w)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise InputError("degenerate input: zero-norm weight vector has no worst-case direction")
    return (-y * eps_prime / norm) * w
