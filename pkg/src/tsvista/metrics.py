"""Evaluation statistics across datasets: accuracy, ranks, Friedman/Nemenyi,
critical-difference diagrams and the augmentation semantic-drift study."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from scipy.stats import chi2

from .augment import AugmentationKind, augment_sample
from .data import Dataset
from .errors import DataError, UnsupportedError

# Nemenyi critical values q_0.05(k) for the two-tailed studentized range
# statistic at infinite degrees of freedom, divided by sqrt(2).
_Q05 = {
    2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031,
    9: 3.102, 10: 3.164, 11: 3.219, 12: 3.268, 13: 3.313, 14: 3.354,
    15: 3.391, 16: 3.426, 17: 3.458, 18: 3.489, 19: 3.517, 20: 3.544,
}


@dataclass
class ResultsTable:
    """Accuracy matrix: one row per dataset, one column per method."""

    methods: list[str]
    datasets: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.datasets), len(self.methods)):
            raise DataError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.datasets)} datasets x {len(self.methods)} methods"
            )
        finite = self.values[np.isfinite(self.values)]
        if finite.size and ((finite < 0) | (finite > 1)).any():
            raise DataError("accuracies must lie in [0, 1]")

    def check_complete(self) -> None:
        bad = np.argwhere(~np.isfinite(self.values))
        if bad.size:
            i, j = bad[0]
            raise DataError(f"missing cell: dataset {self.datasets[i]!r}, method {self.methods[j]!r}")


def load_results_csv(path) -> ResultsTable:
    """Read a results table: header = method names, first column = datasets."""
    path = Path(path)
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2:
            raise DataError(f"{path}: expected a header row with method names")
        methods = [h.strip() for h in header[1:]]
        datasets, rows = [], []
        for fields in reader:
            if not fields:
                continue
            datasets.append(fields[0].strip())
            rows.append([float(f) if f.strip() else np.nan for f in fields[1:]])
    return ResultsTable(methods=methods, datasets=datasets, values=np.array(rows))


def save_results_csv(table: ResultsTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset"] + table.methods)
        for name, row in zip(table.datasets, table.values):
            writer.writerow([name] + [f"{v:.6f}" for v in row])
    return path


def accuracy(predictions, truth) -> float:
    """Fraction of exact label matches."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise DataError(f"length mismatch: {predictions.shape} vs {truth.shape}")
    if predictions.size == 0:
        raise DataError("cannot compute accuracy of empty inputs")
    return float((predictions == truth).mean())


def _fractional_ranks(row: np.ndarray) -> np.ndarray:
    """Rank one dataset's accuracies: rank 1 = best, ties get the mid rank."""
    order = np.argsort(-row, kind="stable")
    ranks = np.empty(row.size, dtype=np.float64)
    i = 0
    while i < row.size:
        j = i
        while j + 1 < row.size and row[order[j + 1]] == row[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def aggregate(table: ResultsTable) -> dict[str, dict[str, float]]:
    """Per-method average accuracy, average fractional rank and unique wins."""
    table.check_complete()
    if len(table.methods) < 2 or len(table.datasets) < 2:
        raise DataError("rank statistics need at least 2 methods and 2 datasets")
    ranks = np.stack([_fractional_ranks(row) for row in table.values])
    top1 = np.zeros(len(table.methods), dtype=int)
    for row in table.values:
        best = row.max()
        winners = np.flatnonzero(row == best)
        if winners.size == 1:  # shared first places earn no credit
            top1[winners[0]] += 1
    return {
        method: {
            "avg_acc": float(table.values[:, j].mean()),
            "avg_rank": float(ranks[:, j].mean()),
            "num_top1": int(top1[j]),
        }
        for j, method in enumerate(table.methods)
    }


def friedman_nemenyi(table: ResultsTable, alpha: float = 0.05) -> dict:
    """Friedman chi-square over average ranks plus the Nemenyi critical difference."""
    if alpha != 0.05:
        raise UnsupportedError("only alpha = 0.05 is supported (embedded q table)")
    table.check_complete()
    k = len(table.methods)
    n = len(table.datasets)
    if k < 3:
        raise UnsupportedError(f"the Friedman test needs >= 3 methods, got {k}")
    if n < 2:
        raise DataError(f"need >= 2 datasets, got {n}")
    if k > max(_Q05):
        raise UnsupportedError(f"q table covers k <= {max(_Q05)}, got {k}")
    ranks = np.stack([_fractional_ranks(row) for row in table.values])
    avg_ranks = ranks.mean(axis=0)
    stat = 12.0 * n / (k * (k + 1)) * (np.sum(avg_ranks**2) - k * (k + 1) ** 2 / 4.0)
    critical = float(chi2.ppf(1.0 - alpha, k - 1))
    cd = _Q05[k] * np.sqrt(k * (k + 1) / (6.0 * n))
    return {
        "friedman_stat": float(stat),
        "chi2_critical": critical,
        "reject": bool(stat > critical),
        "CD": float(cd),
        "avg_ranks": {m: float(r) for m, r in zip(table.methods, avg_ranks)},
    }


def _rank_groups(sorted_ranks: list[float], cd: float) -> list[tuple[int, int]]:
    """Maximal index intervals whose rank span is within the critical difference."""
    groups = []
    n = len(sorted_ranks)
    for i in range(n):
        j = i
        while j + 1 < n and sorted_ranks[j + 1] - sorted_ranks[i] <= cd:
            j += 1
        if j > i:
            groups.append((i, j))
    return [g for g in groups if not any(o != g and o[0] <= g[0] and g[1] <= o[1] for o in groups)]


def render_cd_diagram(avg_ranks: dict[str, float], cd: float, out) -> Path:
    """Write a critical-difference diagram as a standalone SVG file.

    Methods sit on a number line at their average rank; bars connect groups
    whose rank difference is within the critical difference.
    """
    if len(avg_ranks) < 2:
        raise DataError("a CD diagram needs at least 2 methods")
    items = sorted(avg_ranks.items(), key=lambda kv: (kv[1], kv[0]))
    names = [name for name, _ in items]
    ranks = [rank for _, rank in items]
    lo = float(np.floor(min(ranks)))
    hi = float(np.ceil(max(ranks)))
    if hi - lo < 1:
        hi = lo + 1

    width, x0, x1 = 640, 80, 560
    axis_y = 60

    def to_x(rank: float) -> float:
        return x0 + (rank - lo) / (hi - lo) * (x1 - x0)

    groups = _rank_groups(ranks, cd)
    bar_y0 = axis_y + 14
    label_y0 = bar_y0 + 10 * len(groups) + 18
    height = label_y0 + 16 * len(names) + 20

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{x0}" y="18">critical difference = {cd:.4f}</text>',
        f'<line x1="{x0}" y1="{axis_y}" x2="{x1}" y2="{axis_y}" stroke="black"/>',
    ]
    tick = lo
    while tick <= hi + 1e-9:
        x = to_x(tick)
        parts.append(f'<line x1="{x:.1f}" y1="{axis_y - 4}" x2="{x:.1f}" y2="{axis_y + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{axis_y - 8}" text-anchor="middle">{tick:g}</text>')
        tick += 1.0
    for gi, (i, j) in enumerate(groups):
        y = bar_y0 + 10 * gi
        parts.append(
            f'<line x1="{to_x(ranks[i]):.1f}" y1="{y}" x2="{to_x(ranks[j]):.1f}" y2="{y}" '
            f'stroke="black" stroke-width="3"/>'
        )
    for mi, (name, rank) in enumerate(zip(names, ranks)):
        y = label_y0 + 16 * mi
        x = to_x(rank)
        parts.append(f'<line x1="{x:.1f}" y1="{axis_y}" x2="{x:.1f}" y2="{y - 10}" stroke="gray"/>')
        parts.append(f'<line x1="{x:.1f}" y1="{y - 10}" x2="{x0 - 6}" y2="{y - 10}" stroke="gray"/>')
        parts.append(f'<text x="{x0 - 10}" y="{y - 6}" text-anchor="end">{escape(name)} ({rank:.3f})</text>')
    parts.append("</svg>")

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts))
    return out


def semantic_drift_study(
    dataset: Dataset,
    model,
    bank: list[AugmentationKind],
    rng: np.random.Generator | None = None,
    drift_kind: AugmentationKind | None = None,
) -> dict:
    """Accuracy on raw, singly-augmented and prototype-aggregated test sets.

    The prototype condition classifies the mean of the encoder
    representations of one view per bank entry; the augmented condition uses
    the bank's slicing entry (or its first entry) alone. Results are
    reported, not asserted: augmentation may or may not move samples across
    the decision boundary.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if drift_kind is None:
        drift_kind = next((k for k in bank if k.kind == "slicing"), bank[0])
    samples = dataset.samples
    truth = dataset.labels()

    raw_pred, _ = model.predict_batch(samples)

    drifted = [augment_sample(s, drift_kind, rng) for s in samples]
    drift_pred, _ = model.predict_batch(drifted)

    view_reps = [
        model.represent([augment_sample(s, kind, rng) for s in samples]) for kind in bank
    ]
    proto_pred, _ = model.predict_from_repr(sum(view_reps) / len(view_reps))

    return {
        "raw": accuracy(raw_pred, truth),
        "augmented": accuracy(drift_pred, truth),
        "prototype": accuracy(proto_pred, truth),
        "drift_kind": drift_kind.kind,
        "n": len(samples),
    }
