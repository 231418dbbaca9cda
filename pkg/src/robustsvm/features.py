"""Seeded random Fourier feature blocks.

A block is regenerated bitwise-identically from (master_seed, iteration,
block_size, d, gamma); models therefore store coefficient vectors only.
Stream layout per block, front to back: all block_size*d spectral
frequencies (row major omega matrix, each N(0, 2*gamma)), then block_size
phases (uniform on [0, 2*pi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InputError
from .kernels import RBFKernel


@dataclass(frozen=True)
class FeatureBlock:
    seed: int
    iteration: int
    omegas: np.ndarray  # (block_size, d)
    offsets: np.ndarray  # (block_size,)

    @property
    def block_size(self) -> int:
        return self.omegas.shape[0]

    @property
    def d(self) -> int:
        return self.omegas.shape[1]


def sample_block(master_seed: int, iteration: int, block_size: int, d: int, kernel: RBFKernel) -> FeatureBlock:
    """Draw the iteration's feature block from the RBF spectral law N(0, 2*gamma*I)."""
    if block_size < 1:
        raise InputError(f"block_size must be >= 1, got {block_size}")
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    n_normals = block_size * d
    pairs = (n_normals + 1) // 2
    u = rng.uniforms(master_seed, rng.PURPOSE_FEATURES, iteration, 2 * pairs + block_size)
    z = np.empty(2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[0 : 2 * pairs : 2]))
    angle = 2.0 * np.pi * u[1 : 2 * pairs : 2]
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    omegas = math.sqrt(2.0 * kernel.gamma) * z[:n_normals].reshape(block_size, d)
    offsets = 2.0 * np.pi * u[2 * pairs :]
    return FeatureBlock(seed=master_seed, iteration=iteration, omegas=omegas, offsets=offsets)


def phi(block: FeatureBlock, x: np.ndarray) -> np.ndarray:
    """Feature vector sqrt(2/m) * cos(omega_i . x + b_i); squared norm at most 2."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != block.d:
        raise InputError(f"expected a vector of dimension {block.d}, got shape {x.shape}")
    scale = math.sqrt(2.0 / block.block_size)
    return scale * np.cos(block.omegas @ x + block.offsets)


def phi_matrix(block: FeatureBlock, X: np.ndarray) -> np.ndarray:
    """Row-wise feature map of an (n, d) matrix; returns (n, block_size)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != block.d:
        raise InputError(f"expected an (n, {block.d}) matrix, got shape {X.shape}")
    scale = math.sqrt(2.0 / block.block_size)
    return scale * np.cos(X @ block.omegas.T + block.offsets)


def approx_kernel(blocks: list[FeatureBlock], x: np.ndarray, x2: np.ndarray) -> float:
    """Monte Carlo kernel estimate: mean over blocks of <phi(x), phi(x2)>."""
    if not blocks:
        raise InputError("approx_kernel needs at least one feature block")
    total = 0.0
    for block in blocks:
        total += float(phi(block, x) @ phi(block, x2))
    return total / len(blocks)
