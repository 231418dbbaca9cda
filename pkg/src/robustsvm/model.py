"""Trained model container, score/gradient evaluation, and the model file.

A model never stores feature blocks: each entry keeps only its iteration
index, and evaluation regenerates the block from (master_seed, iteration).
Scores are the ordered sum over entries of <alpha_i, phi_i(x)> plus the
bias; summation order is part of the contract (cached and uncached
evaluation must agree bitwise), so every evaluation path walks entries
front to back.

File layout (little endian throughout):

    bytes 0..3    magic b"RSVM"
    bytes 4..7    uint32 header length H
    bytes 8..8+H  UTF-8 JSON header: format_version, generator_id,
                  kernel {family, gamma}, config (TrainConfig dict),
                  eps_prime, bias, norm_sq, d, n_entries, n_norms
    then per entry: uint64 iteration, float64[block_size] coefficients
    then float64[n_norms] tracked squared-norm history

JSON floats are written with repr round-tripping, so save -> load is
bit exact.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .errors import DataFormatError, InputError
from .features import FeatureBlock, phi_matrix, sample_block
from .kernels import RBFKernel
from .rng import GENERATOR_ID

_MAGIC = b"RSVM"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    score: float
    label: int  # +1 iff score >= 0


@dataclass
class Model:
    config: TrainConfig
    kernel: RBFKernel
    eps_prime: float
    d: int
    entries: list[tuple[int, np.ndarray]] = field(default_factory=list)
    norm_sq: float = 0.0
    bias: float = 0.0
    generator_id: str = GENERATOR_ID
    norm_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InputError(f"expected an (n, {self.d}) matrix, got shape {X.shape}")
        return X

    def _blocks(self):
        cfg = self.config
        for iteration, _ in self.entries:
            yield sample_block(cfg.master_seed, iteration, cfg.block_size, self.d, self.kernel)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Scores f(x) + b for each row of X."""
        X = self._check_input(X)
        return _scores(self._blocks(), self.entries, X, self.bias)

    def input_gradient(self, X: np.ndarray) -> np.ndarray:
        """Row-wise gradient of the score with respect to the input."""
        X = self._check_input(X)
        return _gradients(self._blocks(), self.entries, X)

    def cached(self) -> "CachedScorer":
        """Materialize feature blocks once for evaluation-heavy loops."""
        return CachedScorer(self)

    def save(self, path) -> None:
        header = {
            "format_version": _FORMAT_VERSION,
            "generator_id": self.generator_id,
            "kernel": {"family": self.kernel.family, "gamma": self.kernel.gamma},
            "config": self.config.to_dict(),
            "eps_prime": self.eps_prime,
            "bias": self.bias,
            "norm_sq": self.norm_sq,
            "d": self.d,
            "n_entries": len(self.entries),
            "n_norms": int(self.norm_history.shape[0]),
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for iteration, alpha in self.entries:
                fh.write(struct.pack("<Q", iteration))
                fh.write(np.ascontiguousarray(alpha, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.norm_history, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != _MAGIC:
            raise DataFormatError(f"not a model file: bad magic {data[:4]!r}", offset=0)
        if len(data) < 8:
            raise DataFormatError("truncated model file", offset=len(data))
        (header_len,) = struct.unpack_from("<I", data, 4)
        header_end = 8 + header_len
        if len(data) < header_end:
            raise DataFormatError("truncated model header", offset=len(data))
        try:
            header = json.loads(data[8:header_end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"unreadable model header: {exc}", offset=8) from None
        if header.get("format_version") != _FORMAT_VERSION:
            raise DataFormatError(f"unsupported model format version {header.get('format_version')}")
        if header.get("generator_id") != GENERATOR_ID:
            raise InputError(
                f"model was written with generator {header.get('generator_id')!r}; "
                f"this build regenerates features with {GENERATOR_ID!r} and cannot reproduce it"
            )
        config = TrainConfig.from_dict(header["config"])
        kernel = RBFKernel(gamma=header["kernel"]["gamma"], family=header["kernel"]["family"])
        d = int(header["d"])
        block_size = config.block_size
        entry_bytes = 8 + 8 * block_size
        n_entries = int(header["n_entries"])
        n_norms = int(header["n_norms"])
        expected = header_end + n_entries * entry_bytes + 8 * n_norms
        if len(data) != expected:
            raise DataFormatError(
                f"model payload size mismatch: expected {expected} bytes, file has {len(data)}",
                offset=min(expected, len(data)),
            )
        entries: list[tuple[int, np.ndarray]] = []
        pos = header_end
        for _ in range(n_entries):
            (iteration,) = struct.unpack_from("<Q", data, pos)
            alpha = np.frombuffer(data, dtype="<f8", count=block_size, offset=pos + 8).copy()
            entries.append((int(iteration), alpha))
            pos += entry_bytes
        norm_history = np.frombuffer(data, dtype="<f8", count=n_norms, offset=pos).copy()
        return cls(
            config=config,
            kernel=kernel,
            eps_prime=float(header["eps_prime"]),
            d=d,
            entries=entries,
            norm_sq=float(header["norm_sq"]),
            bias=float(header["bias"]),
            generator_id=header["generator_id"],
            norm_history=norm_history,
        )


class CachedScorer:
    """Evaluation twin of a Model with feature blocks held in memory.

    Results are bitwise identical to the uncached paths: the cache stores
    exactly the blocks regeneration would produce and walks them in the
    same order. Build once, then share freely across threads (read only).
    """

    def __init__(self, model: Model):
        self.model = model
        self.d = model.d
        self.bias = model.bias
        self._blocks: list[FeatureBlock] = list(model._blocks())

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = self.model._check_input(X)
        return _scores(iter(self._blocks), self.model.entries, X, self.model.bias)

    def input_gradient(self, X: np.ndarray) -> np.ndarray:
        X = self.model._check_input(X)
        return _gradients(iter(self._blocks), self.model.entries, X)


def _scores(blocks, entries, X: np.ndarray, bias: float) -> np.ndarray:
    scores = np.zeros(X.shape[0])
    for block, (_, alpha) in zip(blocks, entries):
        scores += phi_matrix(block, X) @ alpha
    return scores + bias


def _gradients(blocks, entries, X: np.ndarray) -> np.ndarray:
    grads = np.zeros_like(X)
    for block, (_, alpha) in zip(blocks, entries):
        scale = math.sqrt(2.0 / block.block_size)
        slopes = -scale * np.sin(X @ block.omegas.T + block.offsets) * alpha
        grads += slopes @ block.omegas
    return grads


def predict(model: Model, x: np.ndarray) -> Prediction:
    """Score a single input and take the sign (ties go to +1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputError(f"expected a vector, got shape {x.shape}")
    score = float(model.decision_function(x[None, :])[0])
    return Prediction(score=score, label=1 if score >= 0.0 else -1)


def predict_labels(scorer, X: np.ndarray) -> np.ndarray:
    """Batch labels from any scorer (Model or CachedScorer)."""
    scores = scorer.decision_function(X)
    return np.where(scores >= 0.0, 1, -1).astype(np.int64)
