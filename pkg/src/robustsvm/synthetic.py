"""Deterministic synthetic datasets for tests and desk-scale benchmarks.

Two generators:

* two Gaussian blobs in [0, 1]^2, the fixture for convergence studies;
* a rendered digit pair ("1" vs "7" stroke glyphs on a 28x28 canvas with
  seeded jitter and pixel noise), written through real IDX files so the
  full ingestion pipeline is exercised when MNIST itself is not on disk.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import rng
from .data import LabeledDataset, load_idx, select_binary, write_idx


def gaussian_blobs(n: int, seed: int, spread: float = 0.11) -> LabeledDataset:
    """n points, half per class, centers (0.35, 0.35) and (0.65, 0.65), clipped to [0, 1]^2."""
    half = n // 2
    total = 2 * half
    z = rng.normals(seed, rng.PURPOSE_DATA, 0, total * 2).reshape(total, 2) * spread
    centers = np.vstack([np.full((half, 2), 0.35), np.full((n - half, 2), 0.65)])
    X = np.clip(centers + z[: centers.shape[0]], 0.0, 1.0)
    y = np.concatenate([np.full(half, -1, dtype=np.int64), np.full(n - half, 1, dtype=np.int64)])
    order = rng.permutation(seed, rng.PURPOSE_DATA, 1, n)
    return LabeledDataset(features=X[order], labels=y[order], provenance=f"blobs(n={n},seed={seed})")


_SIDE = 28


def _stroke(canvas: np.ndarray, x0: float, y0: float, x1: float, y1: float, width: float, intensity: float) -> None:
    """Add an anti-aliased line segment to a 28x28 canvas."""
    ys, xs = np.mgrid[0:_SIDE, 0:_SIDE]
    dx, dy = x1 - x0, y1 - y0
    length_sq = dx * dx + dy * dy
    t = ((xs - x0) * dx + (ys - y0) * dy) / max(length_sq, 1e-9)
    t = np.clip(t, 0.0, 1.0)
    dist_sq = (xs - (x0 + t * dx)) ** 2 + (ys - (y0 + t * dy)) ** 2
    canvas += intensity * np.exp(-dist_sq / (2.0 * width * width))


def digit_pair_images(n_per_class: int, seed: int, noise: float = 26.0) -> tuple[np.ndarray, np.ndarray]:
    """Render n glyph-1 and n glyph-7 images; returns (u8 images (2n, 784), u8 labels)."""
    total = 2 * n_per_class
    jitter = rng.normals(seed, rng.PURPOSE_DATA, 2, total * 6).reshape(total, 6)
    pixel_noise = rng.normals(seed, rng.PURPOSE_DATA, 3, total * _SIDE * _SIDE).reshape(total, _SIDE, _SIDE)
    images = np.empty((total, _SIDE * _SIDE), dtype=np.uint8)
    labels = np.empty(total, dtype=np.uint8)
    for i in range(total):
        is_seven = i >= n_per_class
        ox, oy = 1.6 * jitter[i, 0], 1.2 * jitter[i, 1]
        width = 1.25 + 0.18 * jitter[i, 2]
        bright = 195.0 + 16.0 * jitter[i, 3]
        slant = 1.1 * jitter[i, 4]
        canvas = np.zeros((_SIDE, _SIDE))
        if is_seven:
            _stroke(canvas, 7.5 + ox, 6.5 + oy, 20.5 + ox, 6.0 + oy, width, bright)
            _stroke(canvas, 20.5 + ox, 6.0 + oy, 11.5 + ox + slant, 23.0 + oy, width, bright)
            labels[i] = 7
        else:
            _stroke(canvas, 14.0 + ox + slant, 4.5 + oy, 13.5 + ox, 23.5 + oy, width, bright)
            _stroke(canvas, 14.0 + ox + slant, 4.5 + oy, 10.5 + ox + slant, 7.5 + oy, 0.8 * width, bright)
            labels[i] = 1
        canvas += noise * pixel_noise[i] + 0.35 * noise
        images[i] = np.clip(canvas, 0.0, 255.0).reshape(-1).astype(np.uint8)
    order = rng.permutation(seed, rng.PURPOSE_DATA, 4, total)
    return images[order], labels[order]


def write_digit_pair_files(workdir, seed: int, n_train_per_class: int, n_test_per_class: int, noise: float = 26.0) -> dict:
    """Materialize the digit pair as IDX files; returns a manifest entry dict."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "train_images": f"digits-train-images-{seed}.idx",
        "train_labels": f"digits-train-labels-{seed}.idx",
        "test_images": f"digits-test-images-{seed}.idx",
        "test_labels": f"digits-test-labels-{seed}.idx",
    }
    train_imgs, train_lbls = digit_pair_images(n_train_per_class, seed, noise=noise)
    test_imgs, test_lbls = digit_pair_images(n_test_per_class, seed + 1, noise=noise)
    write_idx(workdir / paths["train_images"], workdir / paths["train_labels"], train_imgs, train_lbls)
    write_idx(workdir / paths["test_images"], workdir / paths["test_labels"], test_imgs, test_lbls)
    return {"format": "idx", "classes": [1, 7], **paths}


def digit_pair_dataset(workdir, seed: int, n_train_per_class: int, n_test_per_class: int, noise: float = 26.0) -> tuple[LabeledDataset, LabeledDataset]:
    """Generate (or reuse) digit-pair IDX files and load them through the IDX pipeline."""
    workdir = Path(workdir)
    entry = {
        "train_images": workdir / f"digits-train-images-{seed}.idx",
        "train_labels": workdir / f"digits-train-labels-{seed}.idx",
        "test_images": workdir / f"digits-test-images-{seed}.idx",
        "test_labels": workdir / f"digits-test-labels-{seed}.idx",
    }
    if not all(p.exists() for p in entry.values()):
        write_digit_pair_files(workdir, seed, n_train_per_class, n_test_per_class, noise=noise)
    train = select_binary(load_idx(entry["train_images"], entry["train_labels"]), 1, 7)
    test = select_binary(load_idx(entry["test_images"], entry["test_labels"]), 1, 7)
    return train, test
