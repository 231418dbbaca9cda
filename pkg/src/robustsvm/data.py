"""Dataset ingestion and preparation: IDX and CSV loading, binary-pair
selection with /255 normalization, seeded splits and k-fold indexing.

Loaders return a RawDataset (features as stored on disk, integer class
labels); select_binary turns a class pair into a LabeledDataset with
features in [0, 1] and labels in {+1, -1}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .errors import DataFormatError, InputError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class RawDataset:
    features: np.ndarray  # (n, d); uint8 for IDX, float64 for CSV
    labels: np.ndarray  # (n,) integer class ids
    source: str


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray  # (n, d) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64 in {+1, -1}
    provenance: str

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _read_be32(data: bytes, offset: int, what: str) -> int:
    if len(data) < offset + 4:
        raise DataFormatError(f"truncated file while reading {what}", offset=len(data))
    return struct.unpack_from(">I", data, offset)[0]


def load_idx(images_path, labels_path) -> RawDataset:
    """Parse a big-endian IDX image/label pair (u8 pixels, u8 labels).

    The byte length must match the header exactly; any mutated header byte
    is rejected, either by the magic check or by the length check.
    """
    img_data = Path(images_path).read_bytes()
    magic = _read_be32(img_data, 0, "image magic")
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}", offset=0)
    n = _read_be32(img_data, 4, "image count")
    rows = _read_be32(img_data, 8, "row count")
    cols = _read_be32(img_data, 12, "column count")
    expected = 16 + n * rows * cols
    if len(img_data) != expected:
        raise DataFormatError(
            f"image payload size mismatch: header implies {expected} bytes, file has {len(img_data)}",
            offset=min(expected, len(img_data)),
        )
    images = np.frombuffer(img_data, dtype=np.uint8, count=n * rows * cols, offset=16).reshape(n, rows * cols)

    lbl_data = Path(labels_path).read_bytes()
    magic = _read_be32(lbl_data, 0, "label magic")
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"bad label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}", offset=0)
    n_labels = _read_be32(lbl_data, 4, "label count")
    if len(lbl_data) != 8 + n_labels:
        raise DataFormatError(
            f"label payload size mismatch: header implies {8 + n_labels} bytes, file has {len(lbl_data)}",
            offset=min(8 + n_labels, len(lbl_data)),
        )
    if n_labels != n:
        raise DataFormatError(f"count mismatch: {n} images vs {n_labels} labels")
    labels = np.frombuffer(lbl_data, dtype=np.uint8, count=n_labels, offset=8).astype(np.int64)
    return RawDataset(features=images.copy(), labels=labels, source=f"idx:{images_path}")


def write_idx(images_path, labels_path, images: np.ndarray, labels: np.ndarray) -> None:
    """Write a u8 image/label pair in IDX format (images flattened as n x d)."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim == 2:
        n, d = images.shape
        side = int(round(d**0.5))
        rows, cols = (side, side) if side * side == d else (1, d)
    else:
        n, rows, cols = images.shape
        images = images.reshape(n, rows * cols)
    if labels.shape[0] != n:
        raise InputError(f"count mismatch: {n} images vs {labels.shape[0]} labels")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
        fh.write(labels.tobytes())


def load_csv(path, label_column: int = -1) -> RawDataset:
    """Load a rectangular numeric CSV; a non-numeric first row is a header."""
    rows: list[list[float]] = []
    width = None
    with open(path, "r") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
                try:
                    rows.append([float(c) for c in cells])
                except ValueError:
                    continue  # header row
                continue
            if len(cells) != width:
                raise DataFormatError(f"ragged row: expected {width} columns, got {len(cells)}", line=line_no)
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise DataFormatError(f"non-numeric cell: {exc}", line=line_no) from None
    if not rows:
        raise DataFormatError(f"no data rows in {path}")
    table = np.asarray(rows, dtype=np.float64)
    label_column = label_column % table.shape[1]
    labels = table[:, label_column]
    if not np.allclose(labels, np.round(labels)):
        raise DataFormatError("label column contains non-integer values")
    features = np.delete(table, label_column, axis=1)
    return RawDataset(features=features, labels=np.round(labels).astype(np.int64), source=f"csv:{path}")


def normalize_features(features: np.ndarray) -> np.ndarray:
    """Map raw features into [0, 1]: u8 divides by 255, floats pass through.

    Idempotent: normalizing an already normalized matrix is a no-op.
    """
    if np.issubdtype(features.dtype, np.unsignedinteger):
        return features.astype(np.float64) / 255.0
    out = np.asarray(features, dtype=np.float64)
    if out.size and (out.min() < -1e-9 or out.max() > 1.0 + 1e-9):
        raise InputError("float features must already lie in [0, 1]; rescale before loading")
    return out


def select_binary(raw: RawDataset, class_a: int, class_b: int) -> LabeledDataset:
    """Keep the two named classes; class_a maps to +1, class_b to -1."""
    if class_a == class_b:
        raise InputError("class_a and class_b must differ")
    present = set(np.unique(raw.labels).tolist())
    for c in (class_a, class_b):
        if c not in present:
            raise InputError(f"class {c} not present in dataset (has {sorted(present)})")
    mask = (raw.labels == class_a) | (raw.labels == class_b)
    features = normalize_features(raw.features[mask])
    labels = np.where(raw.labels[mask] == class_a, 1, -1).astype(np.int64)
    return LabeledDataset(features=features, labels=labels, provenance=f"{raw.source}#{class_a}v{class_b}")


def kfold_indices(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """k disjoint validation folds covering range(n) after a seeded shuffle.

    The first n % k folds take the extra sample, so sizes differ by at
    most one, largest first.
    """
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if k > n:
        raise InputError(f"k={k} exceeds n={n}")
    order = rng.permutation(seed, rng.PURPOSE_SHUFFLE, 0, n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        val = order[start : start + size]
        train = np.concatenate([order[:start], order[start + size :]])
        folds.append((np.sort(train), np.sort(val)))
        start += size
    return folds


def take_per_class(ds: LabeledDataset, n_per_class: int, seed: int) -> LabeledDataset:
    """Desk-scale subset: first n per class after a seeded shuffle."""
    order = rng.permutation(seed, rng.PURPOSE_SHUFFLE, 1, ds.n)
    keep = []
    counts = {1: 0, -1: 0}
    for i in order:
        label = int(ds.labels[i])
        if counts[label] < n_per_class:
            counts[label] += 1
            keep.append(i)
    keep = np.sort(np.asarray(keep, dtype=np.int64))
    return LabeledDataset(
        features=ds.features[keep],
        labels=ds.labels[keep],
        provenance=f"{ds.provenance}[{n_per_class}/class@{seed}]",
    )


def load_manifest(path) -> dict:
    """Read a manifest mapping experiment names to dataset files and class pairs."""
    with open(path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict):
        raise DataFormatError("manifest must be a JSON object of experiment entries")
    return manifest


def resolve_entry(manifest: dict, name: str, base_dir=None) -> tuple[LabeledDataset, LabeledDataset]:
    """Load the (train, test) pair an experiment entry points at.

    Entry schema: {"format": "idx", "classes": [a, b],
                   "train_images": ..., "train_labels": ...,
                   "test_images": ..., "test_labels": ...}
    or {"format": "csv", "classes": [a, b], "train": ..., "test": ...,
        "label_column": -1}.
    """
    if name not in manifest:
        raise InputError(f"experiment {name!r} not in manifest (has {sorted(manifest)})")
    entry = manifest[name]
    base = Path(base_dir) if base_dir is not None else Path(".")

    def _path(key):
        if key not in entry:
            raise InputError(f"manifest entry {name!r} is missing {key!r}")
        return base / entry[key]

    class_a, class_b = entry.get("classes", (1, -1))
    fmt = entry.get("format", "idx")
    if fmt == "idx":
        train_raw = load_idx(_path("train_images"), _path("train_labels"))
        test_raw = load_idx(_path("test_images"), _path("test_labels"))
    elif fmt == "csv":
        col = entry.get("label_column", -1)
        train_raw = load_csv(_path("train"), label_column=col)
        test_raw = load_csv(_path("test"), label_column=col)
    else:
        raise InputError(f"manifest entry {name!r} has unknown format {fmt!r}")
    return select_binary(train_raw, class_a, class_b), select_binary(test_raw, class_a, class_b)
