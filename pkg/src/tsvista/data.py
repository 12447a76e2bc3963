"""Dataset loading, normalization, batch sampling and few-shot splits."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, FormatError, MalformedFileError

FORMATS = ("ucr_tsv", "uea_ts", "csv_dir")


@dataclass
class TimeSeriesSample:
    """One multivariate series: an (M, T) value matrix plus optional label."""

    values: np.ndarray
    label: int | None = None
    source_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.ndim != 2:
            raise FormatError(f"sample values must be 2-D (M, T), got {self.values.ndim}-D")
        if self.values.shape[1] < 2:
            raise FormatError(f"series length must be >= 2, got {self.values.shape[1]}")

    @property
    def num_variables(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


@dataclass
class Dataset:
    samples: list[TimeSeriesSample]
    name: str = ""
    split: str = "train"
    num_classes: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labeled(self) -> bool:
        return self.num_classes > 0

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def shape(self) -> tuple[int, int]:
        return self.samples[0].values.shape


@dataclass
class PretrainPool:
    """Several datasets with per-dataset sampling probabilities."""

    datasets: list[Dataset]
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.datasets:
            raise ConfigurationError("pretrain pool needs at least one dataset")
        for d in self.datasets:
            if len(d) == 0:
                raise DataError(f"dataset {d.name!r} in pool is empty")
        if self.weights is None:
            sizes = np.array([len(d) for d in self.datasets], dtype=np.float64)
            self.weights = sizes / sizes.sum()
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.datasets),):
            raise ConfigurationError("one weight per dataset required")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ConfigurationError(f"pool weights must sum to 1, got {self.weights.sum()}")

    @property
    def num_samples(self) -> int:
        return sum(len(d) for d in self.datasets)


def _repair_missing(values: np.ndarray, where: str) -> np.ndarray:
    """Linearly interpolate NaNs per variable; edge gaps copy the nearest value."""
    values = np.asarray(values, dtype=np.float64)
    if np.isfinite(values).all():
        return values
    out = values.copy()
    for m in range(out.shape[0]):
        row = out[m]
        bad = ~np.isfinite(row)
        if bad.all():
            raise DataError(f"{where}: variable {m} has no finite values")
        if bad.any():
            idx = np.arange(row.size)
            row[bad] = np.interp(idx[bad], idx[~bad], row[~bad])
    return out


def _remap_labels(raw_labels: list[float]) -> tuple[list[int], int]:
    """Map original label values to 0..C-1 in sorted original order."""
    classes = sorted(set(raw_labels))
    lookup = {c: i for i, c in enumerate(classes)}
    return [lookup[v] for v in raw_labels], len(classes)


def _parse_float(token: str, path: Path, lineno: int) -> float:
    token = token.strip()
    if token in ("", "?", "NaN", "nan", "NA"):
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise MalformedFileError(f"{path}: line {lineno}: cannot parse value {token!r}") from None


def _load_ucr_tsv(path: Path) -> tuple[list[np.ndarray], list[float]]:
    rows, labels = [], []
    length = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.replace(",", "\t").split("\t")
            if len(fields) < 3:
                raise MalformedFileError(f"{path}: line {lineno}: expected label plus >=2 values")
            labels.append(_parse_float(fields[0], path, lineno))
            values = np.array([_parse_float(f, path, lineno) for f in fields[1:]])
            if length is None:
                length = values.size
            elif values.size != length:
                raise FormatError(
                    f"{path}: line {lineno}: length {values.size} != {length} of first row"
                )
            rows.append(values[None, :])
    if not rows:
        raise MalformedFileError(f"{path}: no samples found")
    if any(np.isnan(labels)):
        raise MalformedFileError(f"{path}: missing class label")
    return rows, labels


def _load_uea_ts(path: Path) -> tuple[list[np.ndarray], list[float], bool]:
    """Parse the .ts header/body format; returns (matrices, raw labels, labeled)."""
    labeled = False
    class_values: list[str] = []
    in_data = False
    rows: list[np.ndarray] = []
    labels: list[float] = []
    shape = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@classlabel"):
                    parts = line.split()
                    labeled = len(parts) > 1 and parts[1].lower() == "true"
                    class_values = parts[2:]
                elif low.startswith("@data"):
                    in_data = True
                elif not low.startswith("@"):
                    raise MalformedFileError(f"{path}: line {lineno}: expected @header or @data")
                continue
            parts = line.split(":")
            if labeled:
                if len(parts) < 2:
                    raise MalformedFileError(f"{path}: line {lineno}: missing class label")
                label_token = parts[-1].strip()
                dims = parts[:-1]
                if class_values and label_token not in class_values:
                    raise MalformedFileError(
                        f"{path}: line {lineno}: label {label_token!r} not in @classLabel set"
                    )
                try:
                    labels.append(float(label_token))
                except ValueError:
                    # non-numeric class names map by position in the header list
                    labels.append(float(class_values.index(label_token)))
            else:
                dims = parts
            matrix = []
            for dim in dims:
                values = [_parse_float(tok, path, lineno) for tok in dim.split(",")]
                matrix.append(values)
            lengths = {len(v) for v in matrix}
            if len(lengths) != 1:
                raise FormatError(f"{path}: line {lineno}: ragged dimension lengths {lengths}")
            arr = np.array(matrix, dtype=np.float64)
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise FormatError(f"{path}: line {lineno}: shape {arr.shape} != {shape}")
            rows.append(arr)
    if not rows:
        raise MalformedFileError(f"{path}: no samples found")
    return rows, labels, labeled


def _load_csv_dir(path: Path) -> tuple[list[np.ndarray], list[float], bool, str]:
    split_file = None
    if path.is_file():  # a specific split file inside the directory
        split_file = path
        path = path.parent
    meta_path = path / "meta.json"
    if not meta_path.exists():
        raise MalformedFileError(f"{path}: missing meta.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    for key in ("M", "T", "C"):
        if key not in meta:
            raise MalformedFileError(f"{meta_path}: missing key {key!r}")
    m, t, c = int(meta["M"]), int(meta["T"]), int(meta["C"])
    labeled = c > 0
    if split_file is None:
        for candidate in ("train.csv", "test.csv"):
            if (path / candidate).exists():
                split_file = path / candidate
                break
    if split_file is None:
        raise MalformedFileError(f"{path}: no train.csv or test.csv")
    split = split_file.stem
    rows, labels = [], []
    with open(split_file) as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            if labeled:
                labels.append(_parse_float(fields[0], split_file, lineno))
                fields = fields[1:]
            values = np.array([_parse_float(f, split_file, lineno) for f in fields])
            if values.size != m * t:
                raise FormatError(
                    f"{split_file}: line {lineno}: expected {m * t} values, got {values.size}"
                )
            rows.append(values.reshape(m, t))
    if not rows:
        raise MalformedFileError(f"{split_file}: no samples found")
    if labeled and any(np.isnan(labels)):
        raise MalformedFileError(f"{split_file}: missing class label")
    return rows, labels, labeled, split


def load_dataset(path, format: str) -> Dataset:
    """Load one dataset split; labels are remapped to 0..C-1 by sorted value.

    No z-normalization is applied here. Missing values (NaN or '?') are
    repaired by per-variable linear interpolation.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ConfigurationError(f"unknown format {format!r}, expected one of {FORMATS}")
    if not path.exists():
        raise MalformedFileError(f"{path}: does not exist")

    split = "train"
    if format == "ucr_tsv":
        rows, raw_labels = _load_ucr_tsv(path)
        labeled = True
        name = path.stem
    elif format == "uea_ts":
        rows, raw_labels, labeled = _load_uea_ts(path)
        name = path.stem
    else:
        rows, raw_labels, labeled, split = _load_csv_dir(path)
        name = path.name
    low = name.lower()
    for suffix in ("_train", "_test"):
        if low.endswith(suffix):
            split = suffix[1:]
            name = name[: -len(suffix)]

    if labeled:
        labels, num_classes = _remap_labels(raw_labels)
    else:
        labels, num_classes = [None] * len(rows), 0

    samples = [
        TimeSeriesSample(
            values=_repair_missing(row, f"{path} sample {i}"), label=labels[i], source_id=name
        )
        for i, row in enumerate(rows)
    ]
    return Dataset(samples=samples, name=name, split=split, num_classes=num_classes)


def znormalize(sample: TimeSeriesSample) -> TimeSeriesSample:
    """Scale each variable to mean 0 and population std 1; constants map to 0."""
    values = sample.values
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    out = np.where(std > 0, (values - mean) / np.where(std > 0, std, 1.0), 0.0)
    return replace(sample, values=out)


def sample_batch(pool: PretrainPool, batch_size: int, rng: np.random.Generator) -> list[TimeSeriesSample]:
    """Draw one shape-homogeneous batch from a single pool dataset.

    The source dataset is drawn by the pool weights; samples come without
    replacement when the dataset is large enough.
    """
    if batch_size < 2:
        raise ConfigurationError(f"batch size must be >= 2 for contrastive losses, got {batch_size}")
    k = int(rng.choice(len(pool.datasets), p=pool.weights))
    dataset = pool.datasets[k]
    n = len(dataset)
    replace_draw = n < batch_size
    idx = rng.choice(n, size=batch_size, replace=replace_draw)
    return [dataset.samples[int(i)] for i in idx]


def fewshot_split(dataset: Dataset, ratio: float, rng: np.random.Generator) -> Dataset:
    """Stratified subset of size max(round(ratio * N), C) with >=1 sample per class."""
    if not dataset.labeled:
        raise DataError("few-shot split requires a labeled dataset")
    if not 0.0 < ratio <= 1.0:
        raise ConfigurationError(f"ratio must be in (0, 1], got {ratio}")
    if ratio == 1.0:
        return dataset

    labels = dataset.labels()
    n = len(dataset)
    c = dataset.num_classes
    counts = np.bincount(labels, minlength=c)
    if (counts == 0).any():
        missing = int(np.argmin(counts))
        raise DataError(f"class {missing} has no samples in {dataset.name!r}")

    target = max(int(np.floor(ratio * n + 0.5)), c)
    target = min(target, n)
    # proportional allocation with a floor of one per class (largest remainder)
    quota = counts * (target / n)
    take = np.maximum(np.floor(quota).astype(int), 1)
    take = np.minimum(take, counts)
    order = np.argsort(-(quota - np.floor(quota)), kind="stable")
    i = 0
    while take.sum() < target:
        cls = int(order[i % c])
        if take[cls] < counts[cls]:
            take[cls] += 1
        i += 1
    while take.sum() > target:
        cls = int(np.argmax(take))
        if take[cls] > 1:
            take[cls] -= 1

    chosen: list[int] = []
    for cls in range(c):
        members = np.flatnonzero(labels == cls)
        pick = rng.choice(members.size, size=int(take[cls]), replace=False)
        chosen.extend(int(members[p]) for p in pick)
    chosen.sort()
    subset = [dataset.samples[i] for i in chosen]
    return Dataset(
        samples=subset,
        name=f"{dataset.name}@{ratio:g}",
        split=dataset.split,
        num_classes=c,
    )
