import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustsvm import DataFormatError, InputError
from robustsvm.data import (
    kfold_indices,
    load_csv,
    load_idx,
    load_manifest,
    normalize_features,
    resolve_entry,
    select_binary,
    take_per_class,
    write_idx,
)


def _write_idx_fixture(tmp_path, images, labels, rows=3, cols=3):
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    img_path = tmp_path / "imgs.idx"
    lbl_path = tmp_path / "lbls.idx"
    with open(img_path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, images.shape[0], rows, cols))
        fh.write(images.tobytes())
    with open(lbl_path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        fh.write(labels.tobytes())
    return img_path, lbl_path


class TestIDX:
    def test_well_formed_fixture(self, tmp_path):
        images = np.arange(18, dtype=np.uint8).reshape(2, 9)
        img, lbl = _write_idx_fixture(tmp_path, images, [0, 4])
        raw = load_idx(img, lbl)
        assert raw.features.shape == (2, 9)
        assert np.array_equal(raw.features, images)
        assert np.array_equal(raw.labels, [0, 4])

    def test_wrong_image_magic(self, tmp_path):
        img, lbl = _write_idx_fixture(tmp_path, np.zeros((1, 9)), [1])
        data = bytearray(img.read_bytes())
        struct.pack_into(">I", data, 0, 0x00000802)
        img.write_bytes(bytes(data))
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)

    def test_wrong_label_magic(self, tmp_path):
        img, lbl = _write_idx_fixture(tmp_path, np.zeros((1, 9)), [1])
        data = bytearray(lbl.read_bytes())
        struct.pack_into(">I", data, 0, 0x00000803)
        lbl.write_bytes(bytes(data))
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)

    def test_count_mismatch(self, tmp_path):
        img, _ = _write_idx_fixture(tmp_path, np.zeros((2, 9)), [1, 2])
        _, lbl3 = _write_idx_fixture(tmp_path / "..", np.zeros((3, 9)), [1, 2, 3])
        with pytest.raises(DataFormatError, match="count mismatch"):
            load_idx(img, lbl3)

    def test_truncated_images(self, tmp_path):
        img, lbl = _write_idx_fixture(tmp_path, np.zeros((2, 9)), [1, 2])
        img.write_bytes(img.read_bytes()[:-3])
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)

    def test_any_mutated_header_byte_rejected(self, tmp_path):
        images = np.arange(18, dtype=np.uint8).reshape(2, 9)
        img, lbl = _write_idx_fixture(tmp_path, images, [0, 4])
        original = img.read_bytes()
        for pos in range(16):
            mutated = bytearray(original)
            mutated[pos] ^= 0x01
            img.write_bytes(bytes(mutated))
            with pytest.raises(DataFormatError):
                load_idx(img, lbl)
        img.write_bytes(original)
        load_idx(img, lbl)  # restored file parses again

    def test_write_read_round_trip(self, tmp_path):
        gen = np.random.default_rng(0)
        images = gen.integers(0, 256, (7, 16), dtype=np.uint8)
        labels = gen.integers(0, 10, 7, dtype=np.uint8)
        write_idx(tmp_path / "i.idx", tmp_path / "l.idx", images, labels)
        raw = load_idx(tmp_path / "i.idx", tmp_path / "l.idx")
        assert np.array_equal(raw.features, images)
        assert np.array_equal(raw.labels, labels)


class TestCSV:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,1\n3,4,-1\n")
        raw = load_csv(path, label_column=2)
        assert np.array_equal(raw.features, [[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(raw.labels, [1, -1])

    def test_header_detected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,label\n1,2,1\n3,4,-1\n")
        raw = load_csv(path)
        assert raw.features.shape == (2, 2)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,1\n3,4\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_csv(path)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,1\n3,oops,1\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DataFormatError):
            load_csv(path)

    def test_large_round_trip(self, tmp_path):
        gen = np.random.default_rng(3)
        features = gen.uniform(0, 1, (10_000, 4))
        labels = gen.choice([1, 7], 10_000)
        path = tmp_path / "big.csv"
        with open(path, "w") as fh:
            for row, label in zip(features, labels):
                fh.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
        raw = load_csv(path)
        assert np.array_equal(raw.features, features)  # repr round-trips exactly
        assert np.array_equal(raw.labels, labels)


class TestSelectBinary:
    def _raw(self):
        from robustsvm.data import RawDataset

        features = np.array([[0], [64], [128], [192], [255], [32]], dtype=np.uint8)
        labels = np.array([0, 4, 7, 0, 4, 7])
        return RawDataset(features=features, labels=labels, source="fixture")

    def test_keeps_only_pair(self):
        ds = select_binary(self._raw(), 0, 4)
        assert ds.n == 4
        assert set(ds.labels.tolist()) == {1, -1}

    def test_normalization_endpoints(self):
        ds = select_binary(self._raw(), 0, 4)
        assert ds.features.min() == 0.0
        assert ds.features.max() == 1.0  # pixel 255 -> 1.0

    def test_swap_flips_signs(self):
        a = select_binary(self._raw(), 0, 4)
        b = select_binary(self._raw(), 4, 0)
        assert np.array_equal(a.labels, -b.labels)
        assert np.array_equal(a.features, b.features)

    def test_missing_class(self):
        with pytest.raises(InputError):
            select_binary(self._raw(), 0, 9)

    def test_same_class_rejected(self):
        with pytest.raises(InputError):
            select_binary(self._raw(), 4, 4)


def test_normalize_idempotent():
    u8 = np.array([[0, 128, 255]], dtype=np.uint8)
    once = normalize_features(u8)
    twice = normalize_features(once)
    assert np.array_equal(once, twice)
    with pytest.raises(InputError):
        normalize_features(np.array([[2.0]]))


class TestKFold:
    def test_even_split(self):
        folds = kfold_indices(10, 5, seed=1)
        assert len(folds) == 5
        sizes = [len(val) for _, val in folds]
        assert sizes == [2, 2, 2, 2, 2]

    def test_remainder_largest_first(self):
        folds = kfold_indices(11, 5, seed=1)
        assert [len(val) for _, val in folds] == [3, 2, 2, 2, 2]

    def test_deterministic(self):
        a = kfold_indices(20, 4, seed=9)
        b = kfold_indices(20, 4, seed=9)
        for (ta, va), (tb, vb) in zip(a, b):
            assert np.array_equal(ta, tb) and np.array_equal(va, vb)

    def test_k_larger_than_n(self):
        with pytest.raises(InputError):
            kfold_indices(3, 5, seed=0)
        with pytest.raises(InputError):
            kfold_indices(10, 1, seed=0)

    @given(n=st.integers(min_value=4, max_value=60), k=st.integers(min_value=2, max_value=8))
    @settings(max_examples=60, deadline=None)
    def test_disjoint_and_covering(self, n, k):
        if k > n:
            return
        folds = kfold_indices(n, k, seed=5)
        all_val = np.concatenate([val for _, val in folds])
        assert np.array_equal(np.sort(all_val), np.arange(n))
        for train_idx, val_idx in folds:
            assert np.intersect1d(train_idx, val_idx).size == 0
            assert np.array_equal(np.sort(np.concatenate([train_idx, val_idx])), np.arange(n))


def test_take_per_class():
    from robustsvm.data import LabeledDataset

    gen = np.random.default_rng(0)
    ds = LabeledDataset(
        features=gen.uniform(0, 1, (40, 2)),
        labels=np.array([1, -1] * 20),
        provenance="fixture",
    )
    sub = take_per_class(ds, 5, seed=3)
    assert sub.n == 10
    assert (sub.labels == 1).sum() == 5
    assert (sub.labels == -1).sum() == 5
    again = take_per_class(ds, 5, seed=3)
    assert np.array_equal(sub.features, again.features)


class TestManifest:
    def test_resolve_idx_entry(self, tmp_path):
        images = np.arange(36, dtype=np.uint8).reshape(4, 9)
        labels = np.array([1, 7, 1, 7], dtype=np.uint8)
        write_idx(tmp_path / "tri.idx", tmp_path / "trl.idx", images, labels)
        write_idx(tmp_path / "tei.idx", tmp_path / "tel.idx", images[:2], labels[:2])
        manifest_path = tmp_path / "manifest.json"
        manifest_path.write_text(
            '{"demo-1v7": {"format": "idx", "classes": [1, 7],'
            ' "train_images": "tri.idx", "train_labels": "trl.idx",'
            ' "test_images": "tei.idx", "test_labels": "tel.idx"}}'
        )
        manifest = load_manifest(manifest_path)
        train_ds, test_ds = resolve_entry(manifest, "demo-1v7", base_dir=tmp_path)
        assert train_ds.n == 4 and test_ds.n == 2
        assert set(train_ds.labels.tolist()) == {1, -1}

    def test_unknown_experiment(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"a": {}}')
        with pytest.raises(InputError):
            resolve_entry(load_manifest(path), "b")

    def test_missing_key(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"a": {"format": "idx", "classes": [1, 7]}}')
        with pytest.raises(InputError):
            resolve_entry(load_manifest(path), "a")
