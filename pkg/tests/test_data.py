import numpy as np
import pytest

from tsvista.data import (
    Dataset,
    PretrainPool,
    fewshot_split,
    load_dataset,
    sample_batch,
    znormalize,
)
from tsvista.errors import ConfigurationError, DataError, FormatError, MalformedFileError

from conftest import make_dataset, make_sample


def test_ucr_tsv_label_remap(tmp_path):
    path = tmp_path / "Tiny_TRAIN.tsv"
    path.write_text("1\t0.5\t0.2\t0.1\n-1\t1.0\t2.0\t3.0\n")
    ds = load_dataset(path, "ucr_tsv")
    assert ds.num_classes == 2
    assert sorted(s.label for s in ds.samples) == [0, 1]
    # sorted original order: -1 -> 0, 1 -> 1
    assert ds.samples[0].label == 1 and ds.samples[1].label == 0
    assert ds.shape() == (1, 3)
    assert ds.split == "train" and ds.name == "Tiny"


def test_ecg200_like_counts(data_dir):
    ds = load_dataset(data_dir / "ECG200Like_TRAIN.tsv", "ucr_tsv")
    assert len(ds) == 100
    assert ds.shape() == (1, 96)
    assert ds.num_classes == 2


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("")
    with pytest.raises(MalformedFileError):
        load_dataset(path, "ucr_tsv")


def test_ragged_rows_rejected(tmp_path):
    path = tmp_path / "ragged.tsv"
    path.write_text("1\t1\t2\t3\n1\t1\t2\n")
    with pytest.raises(FormatError):
        load_dataset(path, "ucr_tsv")


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("1\t1\t2\t3\n1\t1\tx\t3\n")
    with pytest.raises(MalformedFileError, match="line 2"):
        load_dataset(path, "ucr_tsv")


def test_missing_values_interpolated(tmp_path):
    path = tmp_path / "gaps.tsv"
    path.write_text("1\t?\t2.0\tNaN\t4.0\t?\n1\t0\t1\t2\t3\t4\n")
    ds = load_dataset(path, "ucr_tsv")
    # leading gap copies, interior interpolates, trailing copies
    np.testing.assert_allclose(ds.samples[0].values[0], [2.0, 2.0, 3.0, 4.0, 4.0])


def test_uea_ts_roundtrip(tmp_path):
    path = tmp_path / "Multi_TRAIN.ts"
    path.write_text(
        "@problemName Multi\n@dimensions 2\n@classLabel true 1 2\n@data\n"
        "1.0,2.0,3.0:4.0,5.0,6.0:1\n"
        "7.0,8.0,9.0:1.0,1.0,1.0:2\n"
    )
    ds = load_dataset(path, "uea_ts")
    assert ds.shape() == (2, 3)
    assert ds.num_classes == 2
    np.testing.assert_allclose(ds.samples[0].values, [[1, 2, 3], [4, 5, 6]])
    assert [s.label for s in ds.samples] == [0, 1]


def test_uea_ts_unlabeled(tmp_path):
    path = tmp_path / "U_TRAIN.ts"
    path.write_text("@problemName U\n@classLabel false\n@data\n1,2,3\n4,5,6\n")
    ds = load_dataset(path, "uea_ts")
    assert not ds.labeled
    assert ds.samples[0].label is None


def test_csv_dir_both_splits(tmp_path):
    root = tmp_path / "toy"
    root.mkdir()
    (root / "meta.json").write_text('{"M": 2, "T": 3, "C": 2}')
    (root / "train.csv").write_text("0,1,2,3,4,5,6\n1,6,5,4,3,2,1\n")
    (root / "test.csv").write_text("1,1,1,1,1,1,2\n")
    ds = load_dataset(root, "csv_dir")
    assert ds.split == "train" and len(ds) == 2 and ds.shape() == (2, 3)
    test = load_dataset(root / "test.csv", "csv_dir")
    assert test.split == "test" and len(test) == 1


def test_znormalize_values():
    sample = make_sample([[1.0, 2.0, 3.0]])
    out = znormalize(sample)
    np.testing.assert_allclose(out.values[0], [-1.224744871, 0.0, 1.224744871], atol=1e-8)


def test_znormalize_constant_and_idempotent(rng):
    sample = make_sample([[5.0, 5.0, 5.0], [1.0, 4.0, 7.0]])
    out = znormalize(sample)
    np.testing.assert_array_equal(out.values[0], 0.0)
    twice = znormalize(out)
    np.testing.assert_allclose(twice.values, out.values, atol=1e-12)
    noisy = make_sample(rng.standard_normal((3, 40)))
    once = znormalize(noisy)
    np.testing.assert_allclose(znormalize(once).values, once.values, atol=1e-12)


def test_pool_weights_default_and_checks(rng):
    d1 = make_dataset(rng.standard_normal((4, 1, 8)), [0, 1, 0, 1])
    d2 = make_dataset(rng.standard_normal((12, 1, 8)), [0, 1] * 6)
    pool = PretrainPool(datasets=[d1, d2])
    np.testing.assert_allclose(pool.weights, [0.25, 0.75])
    with pytest.raises(ConfigurationError):
        PretrainPool(datasets=[d1, d2], weights=np.array([0.5, 0.6]))


def test_sample_batch_single_source_and_deterministic(rng):
    d1 = make_dataset(rng.standard_normal((8, 1, 8)), [0, 1] * 4, name="a")
    d2 = make_dataset(rng.standard_normal((8, 2, 16)), [0, 1] * 4, name="b")
    pool = PretrainPool(datasets=[d1, d2])
    batch = sample_batch(pool, 4, np.random.default_rng(7))
    shapes = {s.values.shape for s in batch}
    assert len(shapes) == 1
    again = sample_batch(pool, 4, np.random.default_rng(7))
    for x, y in zip(batch, again):
        np.testing.assert_array_equal(x.values, y.values)


def test_sample_batch_degenerate_weights(rng):
    d1 = make_dataset(rng.standard_normal((6, 1, 8)), [0, 1] * 3, name="first")
    d2 = make_dataset(rng.standard_normal((6, 1, 8)), [0, 1] * 3, name="second")
    pool = PretrainPool(datasets=[d1, d2], weights=np.array([1.0, 0.0]))
    for trial in range(5):
        batch = sample_batch(pool, 4, np.random.default_rng(trial))
        assert all(s.source_id == "first" for s in batch)


def test_sample_batch_without_replacement(rng):
    d = make_dataset(rng.standard_normal((8, 1, 8)), [0, 1] * 4)
    pool = PretrainPool(datasets=[d])
    batch = sample_batch(pool, 8, np.random.default_rng(3))
    ids = [id(s) for s in batch]
    assert len(set(ids)) == 8
    with pytest.raises(ConfigurationError):
        sample_batch(pool, 1, rng)


def test_fewshot_sizes(data_dir):
    ds = load_dataset(data_dir / "ECG200Like_TRAIN.tsv", "ucr_tsv")
    for ratio, expected in ((0.05, 5), (0.15, 15), (0.20, 20)):
        sub = fewshot_split(ds, ratio, np.random.default_rng(0))
        assert len(sub) == expected
        counts = np.bincount(sub.labels(), minlength=2)
        assert (counts >= 1).all()
        assert counts.sum() == expected


def test_fewshot_identity_and_floor(rng):
    ds = make_dataset(rng.standard_normal((10, 1, 8)), [0] * 5 + [1] * 5)
    assert fewshot_split(ds, 1.0, rng) is ds
    sub = fewshot_split(ds, 0.01, np.random.default_rng(0))
    assert len(sub) == 2
    assert set(sub.labels()) == {0, 1}


def test_fewshot_deterministic(data_dir):
    ds = load_dataset(data_dir / "ECG200Like_TRAIN.tsv", "ucr_tsv")
    a = fewshot_split(ds, 0.15, np.random.default_rng(42))
    b = fewshot_split(ds, 0.15, np.random.default_rng(42))
    for x, y in zip(a.samples, b.samples):
        np.testing.assert_array_equal(x.values, y.values)


def test_fewshot_empty_class_rejected(rng):
    ds = make_dataset(rng.standard_normal((4, 1, 8)), [0, 0, 0, 0])
    ds.num_classes = 2
    with pytest.raises(DataError):
        fewshot_split(ds, 0.5, rng)
