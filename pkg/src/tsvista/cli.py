"""Command-line interface: pretrain, finetune, evaluate, rasterize, report."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import datagen, metrics
from .augment import parse_bank
from .data import fewshot_split, load_dataset
from .errors import MalformedFileError, TsVistaError
from .imaging import rasterize, save_png
from .pipeline import Checkpoint, ExperimentConfig, finetune, load_config, pretrain

_SPLIT_SUFFIXES = {"ucr_tsv": ("_TRAIN.tsv", "_TEST.tsv"), "uea_ts": ("_TRAIN.ts", "_TEST.ts")}


def _resolve_splits(data_path: str, fmt: str) -> tuple[Path, Path | None]:
    """Locate the train split (and, when present, its test sibling)."""
    path = Path(data_path)
    if fmt == "csv_dir":
        test = path / "test.csv" if (path / "test.csv").exists() else None
        return path, test
    train_sfx, test_sfx = _SPLIT_SUFFIXES[fmt]
    if path.is_dir():
        candidates = sorted(path.glob(f"*{train_sfx}"))
        if len(candidates) != 1:
            raise MalformedFileError(
                f"{path}: expected exactly one *{train_sfx} file, found {len(candidates)}"
            )
        path = candidates[0]
    test = Path(str(path).replace(train_sfx, test_sfx))
    return path, test if test != path and test.exists() else None


def _write_labels(path: Path, labels) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(str(int(v)) for v in labels) + "\n")


def _read_labels(path: Path) -> np.ndarray:
    tokens = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    return np.array([int(float(t)) for t in tokens])


def _write_metrics(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _cmd_pretrain(args) -> int:
    config = load_config(args.config)
    ckpt = pretrain(config)
    print(f"checkpoint written to {ckpt.directory} after {ckpt.step} steps")
    print(f"loss curve: {Path(config.output_dir) / 'loss_curve.csv'}")
    return 0


def _cmd_finetune(args) -> int:
    ckpt = None if args.scratch else Checkpoint.load(args.ckpt)
    base = ckpt.config if ckpt is not None else {}
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    config = ExperimentConfig(**{k: v for k, v in base.items() if k in known})
    config.freeze_encoder = args.freeze
    if args.epochs is not None:
        config.finetune_epochs = args.epochs
    if args.seed is not None:
        config.seed = args.seed

    fmt = args.format or config.data_format
    train_path, test_path = _resolve_splits(args.data, fmt)
    train = load_dataset(train_path, fmt)
    ratio = args.ratio if args.ratio is not None else config.fewshot_ratio
    if ratio < 1.0:
        train = fewshot_split(train, ratio, np.random.default_rng(config.seed))
        print(f"few-shot split: {len(train)} samples at ratio {ratio}")
    model = finetune(ckpt, train, config)

    out = Path(args.out)
    rows = []
    train_pred, _ = model.predict_batch(train.samples)
    rows.append(
        {
            "dataset": train.name,
            "split": "train",
            "ratio": ratio,
            "n": len(train),
            "accuracy": f"{metrics.accuracy(train_pred, train.labels()):.6f}",
        }
    )
    if test_path is not None:
        test = load_dataset(test_path, fmt)
        test_pred, _ = model.predict_batch(test.samples)
        acc = metrics.accuracy(test_pred, test.labels())
        rows.append(
            {
                "dataset": test.name,
                "split": "test",
                "ratio": ratio,
                "n": len(test),
                "accuracy": f"{acc:.6f}",
            }
        )
        _write_labels(out / "predictions.csv", test_pred)
        _write_labels(out / "truth.csv", test.labels())
        print(f"test accuracy: {acc:.4f} ({len(test)} samples)")
    _write_metrics(out / "metrics.csv", rows)
    print(f"metrics written to {out / 'metrics.csv'}")
    return 0


def _cmd_evaluate(args) -> int:
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    acc = metrics.accuracy(pred, truth)
    print(f"accuracy: {acc:.6f} ({pred.size} samples)")
    if args.out:
        _write_metrics(
            Path(args.out) / "metrics.csv",
            [{"n": pred.size, "accuracy": f"{acc:.6f}"}],
        )
    return 0


def _cmd_rasterize(args) -> int:
    fmt = args.format
    path = Path(args.data)
    if fmt != "csv_dir" and path.is_dir():
        files = sorted(list(path.glob("*.tsv")) + list(path.glob("*.ts")))
    else:
        files = [path]
    out = Path(args.out)
    count = 0
    for file in files:
        ds = load_dataset(file, fmt)
        for i, sample in enumerate(ds.samples):
            image = rasterize(sample, args.panel_size)
            save_png(image, out / f"{ds.name}_{ds.split}_{i:04d}.png")
            count += 1
    print(f"wrote {count} images to {out}")
    return 0


def _cmd_report(args) -> int:
    table = metrics.load_results_csv(args.results)
    summary = metrics.aggregate(table)
    out = Path(args.out)
    rows = [
        {"method": m, **{k: f"{v:.6f}" if k != "num_top1" else v for k, v in stats.items()}}
        for m, stats in summary.items()
    ]
    _write_metrics(out / "summary.csv", rows)
    print(f"summary written to {out / 'summary.csv'}")
    if len(table.methods) >= 3:
        stats = metrics.friedman_nemenyi(table)
        _write_metrics(
            out / "stats.csv",
            [
                {
                    "friedman_stat": f"{stats['friedman_stat']:.6f}",
                    "chi2_critical": f"{stats['chi2_critical']:.6f}",
                    "reject": stats["reject"],
                    "CD": f"{stats['CD']:.6f}",
                }
            ],
        )
        svg = metrics.render_cd_diagram(stats["avg_ranks"], stats["CD"], out / "cd_diagram.svg")
        print(f"friedman stat {stats['friedman_stat']:.4f} (reject={stats['reject']}), CD {stats['CD']:.4f}")
        print(f"diagram written to {svg}")
    else:
        print("fewer than 3 methods: skipping the Friedman test")
    return 0


def _cmd_drift(args) -> int:
    ckpt = Checkpoint.load(args.ckpt)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    config = ExperimentConfig(**{k: v for k, v in ckpt.config.items() if k in known})
    if args.epochs is not None:
        config.finetune_epochs = args.epochs
    fmt = args.format or config.data_format
    train_path, test_path = _resolve_splits(args.data, fmt)
    if test_path is None:
        raise MalformedFileError(f"{args.data}: drift study needs a test split")
    train = load_dataset(train_path, fmt)
    test = load_dataset(test_path, fmt)
    model = finetune(ckpt, train, config)
    bank = parse_bank(config.bank)
    report = metrics.semantic_drift_study(test, model, bank, np.random.default_rng(config.seed))
    print(
        f"raw {report['raw']:.4f} | {report['drift_kind']} {report['augmented']:.4f} "
        f"| prototype {report['prototype']:.4f} (n={report['n']})"
    )
    if args.out:
        _write_metrics(
            Path(args.out) / "drift.csv",
            [{k: report[k] for k in ("raw", "augmented", "prototype", "drift_kind", "n")}],
        )
    return 0


def _cmd_make_data(args) -> int:
    written = datagen.generate_all(args.out, args.names or None)
    for name, (train, test) in written.items():
        print(f"{name}: {train} / {test}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsvista")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="run self-supervised pre-training")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint on a labeled dataset")
    p.add_argument("--ckpt", help="checkpoint directory")
    p.add_argument("--data", required=True, help="dataset directory or train-split file")
    p.add_argument("--ratio", type=float, default=None, help="few-shot ratio in (0, 1]")
    p.add_argument("--freeze", action="store_true", help="train only the classifier head")
    p.add_argument("--scratch", action="store_true", help="random initialization baseline")
    p.add_argument("--format", choices=("ucr_tsv", "uea_ts", "csv_dir"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="runs/finetune")
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("evaluate", help="accuracy of a prediction file against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("rasterize", help="export dataset samples as PNG line charts")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ucr_tsv", "uea_ts", "csv_dir"), default="ucr_tsv")
    p.add_argument("--panel-size", type=int, default=64)
    p.set_defaults(func=_cmd_rasterize)

    p = sub.add_parser("report", help="aggregate a results table and draw the CD diagram")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("drift", help="semantic-drift study on a fine-tuned dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("ucr_tsv", "uea_ts", "csv_dir"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_drift)

    p = sub.add_parser("make-data", help="write the bundled synthetic datasets")
    p.add_argument("--out", required=True)
    p.add_argument("--names", nargs="*", default=None, choices=sorted(datagen.DATASETS))
    p.set_defaults(func=_cmd_make_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "finetune" and not args.scratch and not args.ckpt:
        build_parser().error("finetune requires --ckpt (or --scratch)")
    try:
        return args.func(args)
    except TsVistaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
