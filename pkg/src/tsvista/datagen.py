"""Seeded synthetic stand-in datasets with the shapes of small UCR splits.

The sandbox has no archive access, so transfer experiments and examples run
on these generators instead. Counts, lengths and class layouts mirror the
originals (GunPoint 50x150/2, CBF 30x128/3, Coffee 28x286/2, ECG200
100x96/2 with -1/1 labels); real archive files in the same TSV layout can be
dropped in as replacements.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _gauss(t: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def _wander(t: np.ndarray, rng: np.random.Generator, amp: float) -> np.ndarray:
    phase = rng.uniform(0, 2 * np.pi)
    cycles = rng.uniform(0.5, 1.5)
    return amp * rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * cycles * t + phase)


def make_gunpoint_like(rng: np.random.Generator, n: int, t_len: int = 150):
    """Two classes of a single motion bump, with and without a lead-in dip."""
    t = np.linspace(0, 1, t_len)
    x = np.empty((n, 1, t_len))
    y = np.empty(n, dtype=int)
    for i in range(n):
        cls = i % 2
        center = 0.5 + rng.normal(0, 0.04)
        width = rng.uniform(0.10, 0.16)
        amp = rng.uniform(0.9, 1.2)
        series = amp * _gauss(t, center, width)
        if cls == 1:
            series -= rng.uniform(0.35, 0.6) * _gauss(t, center - rng.uniform(0.18, 0.25), 0.05)
        series += _wander(t, rng, 0.15) + rng.normal(0, 0.05, t_len)
        x[i, 0] = series
        y[i] = cls + 1
    return x, y


def make_cbf_like(rng: np.random.Generator, n: int, t_len: int = 128):
    """Cylinder / bell / funnel shapes on random support intervals."""
    steps = np.arange(t_len, dtype=float)
    x = np.empty((n, 1, t_len))
    y = np.empty(n, dtype=int)
    for i in range(n):
        cls = i % 3
        a = rng.integers(t_len // 8, t_len // 4)
        b = a + rng.integers(t_len // 4, (3 * t_len) // 4)
        b = min(b, t_len - 1)
        level = 6.0 + rng.normal(0, 1.0)
        mask = ((steps >= a) & (steps <= b)).astype(float)
        ramp = np.clip((steps - a) / max(b - a, 1), 0.0, 1.0)
        if cls == 0:
            shape = level * mask
        elif cls == 1:
            shape = level * mask * ramp
        else:
            shape = level * mask * (1.0 - ramp)
        x[i, 0] = shape + rng.normal(0, 1.0, t_len)
        y[i] = cls + 1
    return x, y


def make_coffee_like(rng: np.random.Generator, n: int, t_len: int = 286):
    """Spectra-like curves: shared peak positions, class-specific peak ratios."""
    t = np.linspace(0, 1, t_len)
    peaks = (0.12, 0.27, 0.45, 0.62, 0.78, 0.9)
    base_amp = np.array([0.6, 1.0, 0.8, 0.5, 0.9, 0.4])
    class_gain = {
        0: np.array([1.0, 1.0, 0.55, 1.0, 1.25, 1.0]),
        1: np.array([1.0, 0.7, 1.0, 1.35, 0.85, 1.0]),
    }
    x = np.empty((n, 1, t_len))
    y = np.empty(n, dtype=int)
    for i in range(n):
        cls = i % 2
        amps = base_amp * class_gain[cls] * rng.uniform(0.9, 1.1, 6)
        series = sum(
            a * _gauss(t, p + rng.normal(0, 0.004), rng.uniform(0.02, 0.035))
            for a, p in zip(amps, peaks)
        )
        series += 0.2 * t + _wander(t, rng, 0.08) + rng.normal(0, 0.02, t_len)
        x[i, 0] = series
        y[i] = cls
    return x, y


def _ecg_beat(t: np.ndarray, rng: np.random.Generator, ischemic: bool) -> np.ndarray:
    """One heartbeat: P wave, QRS complex, T wave; the sick class inverts T."""
    p = rng.uniform(0.10, 0.22) * _gauss(t, 0.16 + rng.normal(0, 0.015), 0.035)
    qrs_c = 0.40 + rng.normal(0, 0.015)
    qrs_w = rng.uniform(0.014, 0.020) * (1.3 if ischemic else 1.0)
    q = -rng.uniform(0.12, 0.22) * _gauss(t, qrs_c - 0.05, 0.016)
    r_amp = rng.uniform(1.45, 1.8) * (0.82 if ischemic else 1.0)
    r = r_amp * _gauss(t, qrs_c, qrs_w)
    s = -rng.uniform(0.2, 0.35) * _gauss(t, qrs_c + 0.055, 0.02)
    t_amp = rng.uniform(0.3, 0.45)
    if ischemic:
        t_amp = -t_amp * rng.uniform(0.45, 1.1)  # occasionally mild inversion
    t_wave = t_amp * _gauss(t, 0.72 + rng.normal(0, 0.025), rng.uniform(0.05, 0.075))
    st = -rng.uniform(0.03, 0.14) * _gauss(t, 0.55, 0.07) if ischemic else 0.0
    return p + q + r + s + t_wave + st


def make_ecg200_like(rng: np.random.Generator, n: int, t_len: int = 96):
    """Heartbeats labeled -1 (ischemia-like) / 1 (normal), roughly 31/69 mixed."""
    t = np.linspace(0, 1, t_len)
    x = np.empty((n, 1, t_len))
    y = np.empty(n, dtype=int)
    n_sick = int(round(n * 0.31))
    classes = np.array([-1] * n_sick + [1] * (n - n_sick))
    rng.shuffle(classes)
    for i in range(n):
        cls = int(classes[i])
        beat = _ecg_beat(t, rng, ischemic=cls == -1)
        beat = np.roll(beat, rng.integers(-6, 7))
        beat += _wander(t, rng, 0.32) + rng.normal(0, 0.24, t_len)
        x[i, 0] = beat
        y[i] = cls
    return x, y


DATASETS = {
    "GunPointLike": (make_gunpoint_like, 50, 150, 101),
    "CBFLike": (make_cbf_like, 30, 150, 102),
    "CoffeeLike": (make_coffee_like, 28, 28, 103),
    "ECG200Like": (make_ecg200_like, 100, 100, 104),
}


def write_ucr_tsv(path: Path, x: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w") as fh:
        for values, label in zip(x, y):
            row = "\t".join(f"{v:.6f}" for v in values[0])
            fh.write(f"{int(label)}\t{row}\n")


def generate(name: str, out_dir, seed: int | None = None) -> tuple[Path, Path]:
    """Write <name>_TRAIN.tsv and <name>_TEST.tsv; returns the two paths."""
    maker, n_train, n_test, default_seed = DATASETS[name]
    rng = np.random.default_rng(default_seed if seed is None else seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / f"{name}_TRAIN.tsv"
    test_path = out_dir / f"{name}_TEST.tsv"
    x, y = maker(rng, n_train)
    write_ucr_tsv(train_path, x, y)
    x, y = maker(rng, n_test)
    write_ucr_tsv(test_path, x, y)
    return train_path, test_path


def generate_all(out_dir, names=None) -> dict[str, tuple[Path, Path]]:
    names = list(DATASETS) if names is None else list(names)
    return {name: generate(name, out_dir) for name in names}
