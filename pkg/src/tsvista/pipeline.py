"""Pre-training and fine-tuning orchestration plus the experiment config."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .augment import generate_view_sets, parse_bank
from .data import Dataset, PretrainPool, TimeSeriesSample, load_dataset, sample_batch, znormalize
from .encoders import (
    ImageEncoder,
    ProjectionHead,
    SeriesEncoder,
    images_tensor,
    load_checkpoint,
    load_into,
    project,
    save_checkpoint,
    series_tensor,
)
from .errors import ConfigurationError, DataError, NumericError, ShapeError
from .imaging import rasterize
from .losses import (
    LossBreakdown,
    adaptive_temperatures,
    intra_prototype_loss,
    inter_prototype_loss,
    make_prototype,
    mixup_si_loss,
    naive_si_loss,
    prototype_loss,
    sample_mixup_lambdas,
    si_loss,
    total_loss,
)


@dataclass
class ExperimentConfig:
    """Every knob of a run; serialized as flat ``key = value`` text."""

    pretrain_data: list[str] = field(default_factory=list)
    data_format: str = "ucr_tsv"
    bank: str = "jitter,scaling,time_warp,slicing,window_warp"
    batch_size: int = 16
    epochs: int = 2
    lr: float = 7e-3
    lr_decay_steps: int = 0  # 0 selects half an epoch
    lr_decay_gamma: float = 0.5
    weight_decay: float = 1e-4
    seed: int = 3407
    alpha: float = 0.7
    beta: float = 0.9
    gamma: float = 0.1
    tau0: float = 0.1
    tau: float = 0.1
    proj_dim: int = 128
    repr_dim: int = 320
    hidden_dim: int = 64
    depth: int = 10
    image_channels: int = 24
    panel_size: int = 64
    finetune_data: str = ""
    fewshot_ratio: float = 1.0
    finetune_epochs: int = 40
    finetune_lr: float = 1e-3
    classifier_hidden: int = 128
    freeze_encoder: bool = False
    use_proto: bool = True
    use_si: bool = True
    use_mix: bool = True
    detach_mix: bool = False
    output_dir: str = "runs/out"

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigurationError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")


def _parse_value(raw: str, annotation):
    raw = raw.strip()
    if annotation == "bool":
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ConfigurationError(f"expected a boolean, got {raw!r}")
    if annotation == "int":
        return int(raw)
    if annotation == "float":
        return float(raw)
    if annotation.startswith("list"):
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def load_config(path) -> ExperimentConfig:
    """Read a flat key = value config file (``#`` starts a comment)."""
    path = Path(path)
    annotations = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigurationError(f"{path}: line {lineno}: expected key = value")
            if key not in annotations:
                raise ConfigurationError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(raw, str(annotations[key]))
    return ExperimentConfig(**values)


def save_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class Checkpoint:
    directory: Path
    config: dict
    step: int

    @classmethod
    def load(cls, directory) -> "Checkpoint":
        _, config, step = load_checkpoint(directory)
        return cls(directory=Path(directory), config=config, step=step)


def build_models(config: ExperimentConfig) -> dict[str, nn.Module]:
    torch.manual_seed(config.seed)
    return {
        "series_encoder": SeriesEncoder(config.repr_dim, config.hidden_dim, config.depth),
        "image_encoder": ImageEncoder(config.repr_dim, config.image_channels),
        "series_head": ProjectionHead(config.repr_dim, config.proj_dim),
        "image_head": ProjectionHead(config.repr_dim, config.proj_dim),
    }


def step_losses(
    models: dict[str, nn.Module],
    views_a: torch.Tensor,
    views_b: torch.Tensor,
    originals: torch.Tensor,
    images: torch.Tensor,
    temperatures,
    lambdas,
    config: ExperimentConfig,
) -> dict[str, torch.Tensor]:
    """Differentiable loss computation for one prepared batch.

    views_a / views_b are (B, G, M, T), originals (B, M, T), images
    (B, 3, H, W); temperatures is one TemperaturePair per sample.
    """
    b, g, m, t = views_a.shape
    series_encoder = models["series_encoder"]
    series_head = models["series_head"]
    zero = originals.new_zeros(())

    r_all = series_encoder(
        torch.cat([views_a.reshape(b * g, m, t), views_b.reshape(b * g, m, t), originals], dim=0)
    )
    r_a = r_all[: b * g].reshape(b, g, -1)
    r_b = r_all[b * g : 2 * b * g].reshape(b, g, -1)
    r_orig = r_all[2 * b * g :]

    l_intra_mean = zero
    l_inter = zero
    l_proto = zero
    if config.use_proto:
        v_a = project(r_a.reshape(b * g, -1), series_head).reshape(b, g, -1)
        v_b = project(r_b.reshape(b * g, -1), series_head).reshape(b, g, -1)
        l_intra_vec = torch.stack(
            [intra_prototype_loss(v_a[i], v_b[i], temperatures[i]) for i in range(b)]
        )
        z = make_prototype(r_a, series_head)
        z_tilde = make_prototype(r_b, series_head)
        l_inter_vec = inter_prototype_loss(z, z_tilde, config.tau, reduction="none")
        l_proto = prototype_loss(l_inter_vec, l_intra_vec, config.alpha)
        l_intra_mean = l_intra_vec.mean()
        l_inter = l_inter_vec.mean()

    l_naive = zero
    l_mix = zero
    l_si = zero
    if config.use_si:
        r_img = models["image_encoder"](images)
        u = project(r_img, models["image_head"])
        v = project(r_orig, series_head)
        l_naive = naive_si_loss(u, v, config.tau)
        if config.use_mix:
            l_mix = mixup_si_loss(
                u,
                v,
                config.gamma,
                config.tau,
                lambdas=lambdas,
                detach_negatives=config.detach_mix,
            )
            l_si = si_loss(l_naive, l_mix, config.beta)
        else:
            l_si = l_naive

    return {
        "l_intra": l_intra_mean,
        "l_inter": l_inter,
        "l_proto": l_proto,
        "l_naive": l_naive,
        "l_mix": l_mix,
        "l_si": l_si,
        "l_total": total_loss(l_proto, l_si),
    }


def build_pool(config: ExperimentConfig) -> PretrainPool:
    datasets = []
    for path in config.pretrain_data:
        ds = load_dataset(path, config.data_format)
        ds.samples = [znormalize(s) for s in ds.samples]
        datasets.append(ds)
    return PretrainPool(datasets=datasets)


def pretrain(config: ExperimentConfig) -> Checkpoint:
    """Run the self-supervised pre-training loop and save a checkpoint.

    Per step: draw a single-source batch, build the paired view sets and the
    rasterized images, then jointly minimize the prototype and series-image
    losses with Adam under a step-decay schedule.
    """
    if not config.pretrain_data:
        raise ConfigurationError("pretrain_data is empty")
    pool = build_pool(config)
    bank = parse_bank(config.bank)
    rng = np.random.default_rng(config.seed)
    models = build_models(config)
    for model in models.values():
        model.train()
    params = [p for m in models.values() for p in m.parameters()]
    optimizer = torch.optim.Adam(params, lr=config.lr, weight_decay=config.weight_decay)
    steps_per_epoch = max(1, math.ceil(pool.num_samples / config.batch_size))
    decay_every = config.lr_decay_steps or max(1, steps_per_epoch // 2)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=decay_every, gamma=config.lr_decay_gamma
    )
    total_steps = config.epochs * steps_per_epoch

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve_path = out_dir / "loss_curve.csv"
    history: list[LossBreakdown] = []
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr"] + list(LossBreakdown.FIELDS))
        for step in range(total_steps):
            batch = sample_batch(pool, config.batch_size, rng)
            view_sets = [generate_view_sets(s, bank, rng) for s in batch]
            temperatures = [
                adaptive_temperatures(vs.views_a, vs.views_b, config.tau0) for vs in view_sets
            ]
            views_a = torch.stack([series_tensor(vs.views_a) for vs in view_sets])
            views_b = torch.stack([series_tensor(vs.views_b) for vs in view_sets])
            originals = series_tensor(batch)
            images = images_tensor([rasterize(s, config.panel_size) for s in batch])
            lambdas = (
                sample_mixup_lambdas(rng, config.gamma, config.batch_size)
                if config.use_si and config.use_mix
                else None
            )

            losses = step_losses(
                models, views_a, views_b, originals, images, temperatures, lambdas, config
            )
            loss = losses["l_total"]
            if not torch.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at step {step}: "
                    + ", ".join(f"{k}={v.item():.4g}" for k, v in losses.items())
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()

            breakdown = LossBreakdown(*[losses[f].item() for f in LossBreakdown.FIELDS])
            history.append(breakdown)
            writer.writerow(
                [step, f"{optimizer.param_groups[0]['lr']:.6g}"]
                + [f"{x:.6f}" for x in breakdown.as_row()]
            )

    ckpt_dir = out_dir / "checkpoint"
    save_checkpoint(ckpt_dir, models, dataclasses.asdict(config), total_steps)
    return Checkpoint(directory=ckpt_dir, config=dataclasses.asdict(config), step=total_steps)


class ClassifierHead(nn.Module):
    """Single-hidden-layer MLP from representations to class logits.

    Inputs are rescaled to a fixed RMS so the head sees the same magnitude
    whether the encoder is freshly initialized or pre-trained (contrastive
    pre-training is scale-free in the representation norm).
    """

    def __init__(self, in_dim: int, hidden: int, num_classes: int):
        super().__init__()
        self.scale = float(np.sqrt(in_dim))
        self.fc1 = nn.Linear(in_dim, hidden)
        self.fc2 = nn.Linear(hidden, num_classes)

    def forward(self, x):
        x = x / x.norm(dim=-1, keepdim=True).clamp_min(1e-8) * self.scale
        return self.fc2(F.gelu(self.fc1(x)))


@dataclass
class FinetunedModel:
    encoder: SeriesEncoder
    head: ClassifierHead
    num_classes: int
    num_variables: int

    def represent(self, samples) -> torch.Tensor:
        batch = series_tensor([znormalize(s) for s in samples])
        if batch.shape[1] != self.num_variables:
            raise ShapeError(
                f"model was trained on {self.num_variables} variables, got {batch.shape[1]}"
            )
        self.encoder.eval()
        with torch.no_grad():
            return self.encoder(batch)

    def predict_from_repr(self, reps: torch.Tensor) -> tuple[np.ndarray, np.ndarray]:
        self.head.eval()
        with torch.no_grad():
            probs = torch.softmax(self.head(reps), dim=1)
        return probs.argmax(dim=1).numpy(), probs.numpy()

    def predict_batch(self, samples) -> tuple[np.ndarray, np.ndarray]:
        return self.predict_from_repr(self.represent(samples))


def finetune(
    ckpt: Checkpoint | None, train: Dataset, config: ExperimentConfig
) -> FinetunedModel:
    """Fully fine-tune the series encoder with an MLP classifier on top.

    No augmentation and no imaging here: the raw (z-normalized) series feed
    the encoder directly. ``ckpt=None`` trains the same architecture from
    random initialization.
    """
    if train.num_classes < 2:
        raise DataError(f"fine-tuning needs >= 2 classes, got {train.num_classes}")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    encoder = SeriesEncoder(config.repr_dim, config.hidden_dim, config.depth)
    if ckpt is not None:
        tensors, _, _ = load_checkpoint(ckpt.directory)
        load_into({"series_encoder": encoder}, tensors)
    head = ClassifierHead(config.repr_dim, config.classifier_hidden, train.num_classes)

    if config.freeze_encoder:
        for p in encoder.parameters():
            p.requires_grad_(False)
        params = list(head.parameters())
    else:
        params = list(encoder.parameters()) + list(head.parameters())
    optimizer = torch.optim.Adam(params, lr=config.finetune_lr)

    samples = [znormalize(s) for s in train.samples]
    inputs = series_tensor(samples)
    targets = torch.as_tensor(train.labels())
    n = len(samples)
    batch = min(config.batch_size, n)
    encoder.train()
    head.train()
    for _ in range(config.finetune_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = torch.as_tensor(order[start : start + batch])
            logits = head(encoder(inputs[idx]))
            loss = F.cross_entropy(logits, targets[idx])
            if not torch.isfinite(loss):
                raise NumericError("non-finite fine-tuning loss")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    return FinetunedModel(
        encoder=encoder,
        head=head,
        num_classes=train.num_classes,
        num_variables=inputs.shape[1],
    )


def predict(model: FinetunedModel, sample: TimeSeriesSample) -> tuple[int, np.ndarray]:
    """Classify one sample; returns (label, class probability vector)."""
    labels, probs = model.predict_batch([sample])
    return int(labels[0]), probs[0]
