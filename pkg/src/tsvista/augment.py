"""The five-operator augmentation bank and paired view-set generation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .data import TimeSeriesSample
from .errors import ConfigurationError, ShapeError

KINDS = ("jitter", "scaling", "time_warp", "slicing", "window_warp")

_DEFAULT_PARAMS = {
    "jitter": {"sigma": 0.03},
    "scaling": {"sigma": 0.1},
    "time_warp": {"sigma": 0.2, "knots": 4},
    "slicing": {"ratio_low": 0.8, "ratio_high": 1.0},
    "window_warp": {"window_ratio": 0.1, "speeds": (0.5, 2.0)},
}


@dataclass(frozen=True)
class AugmentationKind:
    """One augmentation operator with its (validated) parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown augmentation {self.kind!r}, expected one of {KINDS}")
        merged = dict(_DEFAULT_PARAMS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        p = merged
        if self.kind == "jitter" and p["sigma"] < 0:
            raise ConfigurationError("jitter sigma must be >= 0")
        if self.kind == "scaling" and p["sigma"] < 0:
            raise ConfigurationError("scaling sigma must be >= 0")
        if self.kind == "time_warp":
            if p["sigma"] < 0 or int(p["knots"]) < 1:
                raise ConfigurationError("time_warp needs sigma >= 0 and knots >= 1")
        if self.kind == "slicing":
            lo = p.get("ratio", p["ratio_low"])
            hi = p.get("ratio", p["ratio_high"])
            if not 0.0 < lo <= hi <= 1.0:
                raise ConfigurationError(f"slicing ratio must lie in (0, 1], got [{lo}, {hi}]")
        if self.kind == "window_warp":
            if not 0.0 < p["window_ratio"] < 1.0:
                raise ConfigurationError("window_warp window_ratio must be in (0, 1)")
            if any(s <= 0 for s in p["speeds"]):
                raise ConfigurationError("window_warp speeds must be positive")


@dataclass
class AugmentedViewSet:
    """The two G-element view sets of one sample, one pair per bank entry."""

    base: TimeSeriesSample
    views_a: list[TimeSeriesSample]
    views_b: list[TimeSeriesSample]
    kinds: list[AugmentationKind]

    @property
    def num_augmentations(self) -> int:
        return len(self.kinds)


def _jitter(x, sigma, rng):
    return x + rng.normal(0.0, sigma, x.size) if sigma > 0 else x.copy()


def _scaling(x, sigma, rng):
    return x * rng.normal(1.0, sigma)


def _time_warp(x, sigma, knots, rng):
    t_len = x.size
    anchor = np.linspace(0, t_len - 1, knots + 2)
    speeds = rng.normal(1.0, sigma, knots + 2)
    curve = CubicSpline(anchor, speeds)(np.arange(t_len))
    curve = np.maximum(curve, 0.01)
    positions = np.cumsum(curve)
    positions -= positions[0]
    positions *= (t_len - 1) / positions[-1]
    return kernels.interp_at(np.arange(t_len, dtype=np.float64), positions, x)


def _slicing(x, params, rng):
    t_len = x.size
    if "ratio" in params:
        ratio = float(params["ratio"])
    else:
        ratio = rng.uniform(params["ratio_low"], params["ratio_high"])
    crop = max(2, int(np.floor(ratio * t_len + 0.5)))
    crop = min(crop, t_len)
    if "start" in params:
        start = int(params["start"])
    else:
        start = int(rng.integers(0, t_len - crop + 1))
    return kernels.resample_linear(x[start : start + crop], t_len)


def _window_warp(x, window_ratio, speeds, rng):
    t_len = x.size
    win = max(2, int(np.floor(window_ratio * t_len + 0.5)))
    win = min(win, t_len)
    start = int(rng.integers(0, t_len - win + 1))
    speed = speeds[int(rng.integers(0, len(speeds)))]
    new_win = max(2, int(np.floor(win * speed + 0.5)))
    warped = kernels.resample_linear(x[start : start + win], new_win)
    stitched = np.concatenate([x[:start], warped, x[start + win :]])
    return kernels.resample_linear(stitched, t_len)


def augment(x: np.ndarray, kind: AugmentationKind, rng: np.random.Generator) -> np.ndarray:
    """Apply one augmentation to a single variable (1-D array of length T)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ShapeError(f"augment expects a 1-D series of length >= 2, got shape {x.shape}")
    p = kind.params
    if kind.kind == "jitter":
        return _jitter(x, p["sigma"], rng)
    if kind.kind == "scaling":
        return _scaling(x, p["sigma"], rng)
    if kind.kind == "time_warp":
        return _time_warp(x, p["sigma"], int(p["knots"]), rng)
    if kind.kind == "slicing":
        return _slicing(x, p, rng)
    return _window_warp(x, p["window_ratio"], p["speeds"], rng)


def augment_sample(
    sample: TimeSeriesSample, kind: AugmentationKind, rng: np.random.Generator
) -> TimeSeriesSample:
    """Apply one augmentation to every variable independently."""
    out = np.stack([augment(row, kind, rng) for row in sample.values])
    return replace(sample, values=out)


def generate_view_sets(
    sample: TimeSeriesSample, bank: list[AugmentationKind], rng: np.random.Generator
) -> AugmentedViewSet:
    """Draw the two independent views per bank entry (2G views total)."""
    if not bank:
        raise ConfigurationError("augmentation bank is empty")
    views_a = [augment_sample(sample, kind, rng) for kind in bank]
    views_b = [augment_sample(sample, kind, rng) for kind in bank]
    return AugmentedViewSet(base=sample, views_a=views_a, views_b=views_b, kinds=list(bank))


def view_distance(a, b) -> float:
    """Mean per-variable Euclidean distance of two views, scaled by 1/sqrt(T)."""
    av = a.values if isinstance(a, TimeSeriesSample) else np.asarray(a, dtype=np.float64)
    bv = b.values if isinstance(b, TimeSeriesSample) else np.asarray(b, dtype=np.float64)
    if av.ndim == 1:
        av = av[None, :]
    if bv.ndim == 1:
        bv = bv[None, :]
    if av.shape != bv.shape:
        raise ShapeError(f"view shapes differ: {av.shape} vs {bv.shape}")
    per_var = np.linalg.norm(av - bv, axis=1)
    return float(per_var.mean() / np.sqrt(av.shape[1]))


def default_bank() -> list[AugmentationKind]:
    return [AugmentationKind(kind) for kind in KINDS]


def parse_bank(spec: str) -> list[AugmentationKind]:
    """Parse a bank config string: 'jitter,scaling:sigma=0.2,slicing'."""
    bank = []
    for entry in spec.split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(":")
        params = {}
        for override in parts[1:]:
            key, _, value = override.partition("=")
            if not _:
                raise ConfigurationError(f"bad bank parameter {override!r} (expected key=value)")
            params[key.strip()] = float(value)
        bank.append(AugmentationKind(parts[0], params))
    if not bank:
        raise ConfigurationError(f"empty augmentation bank spec {spec!r}")
    return bank
