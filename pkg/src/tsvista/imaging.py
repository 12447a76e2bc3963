"""Deterministic rendering of time series samples as RGB line-chart images."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .data import TimeSeriesSample
from .errors import ConfigurationError

MIN_PANEL = 16
VERTICAL_MARGIN = 0.05


@dataclass
class RasterImage:
    """H x W x 3 byte image: one square panel per variable on a white grid."""

    pixels: np.ndarray
    panel_size: int
    rows: int
    cols: int

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def default_palette(n: int = 16) -> list[tuple[int, int, int]]:
    """n maximally-spaced hues at full saturation."""
    palette = []
    for k in range(n):
        r, g, b = colorsys.hsv_to_rgb(k / n, 1.0, 0.82)
        palette.append((int(round(r * 255)), int(round(g * 255)), int(round(b * 255))))
    return palette


def _panel_rows(values: np.ndarray, size: int) -> np.ndarray:
    """Map one variable's values to integer pixel rows (top = max value)."""
    margin = max(1, int(np.floor(VERTICAL_MARGIN * size + 0.5)))
    y_lo = margin
    y_hi = size - 1 - margin
    if (y_hi - y_lo) % 2 == 1:
        y_hi -= 1  # even extent keeps half-way rounding symmetric under flips
    vmin = values.min()
    vmax = values.max()
    if vmax == vmin:
        return np.full(values.size, size // 2, dtype=np.int64)
    unit = (values - vmin) / (vmax - vmin)
    return (y_lo + np.rint((1.0 - unit) * (y_hi - y_lo))).astype(np.int64)


def rasterize(sample: TimeSeriesSample, panel_size: int = 64, palette=None) -> RasterImage:
    """Draw each variable as a colored polyline in its own square panel.

    Panels are stitched row-major into a ceil(sqrt(M))-column grid on a white
    background. Observed points get plus markers unless the series is denser
    than a quarter of the panel width. Output bytes depend only on the input.
    """
    if panel_size < MIN_PANEL:
        raise ConfigurationError(f"panel size must be >= {MIN_PANEL}, got {panel_size}")
    values = sample.values
    m, t_len = values.shape
    if palette is None:
        palette = default_palette(max(16, m))
    if len(palette) < m:
        raise ConfigurationError(f"palette has {len(palette)} colors but sample has {m} variables")

    cols = int(np.ceil(np.sqrt(m)))
    rows = int(np.ceil(m / cols))
    pixels = np.full((rows * panel_size, cols * panel_size, 3), 255, dtype=np.uint8)

    xs = np.rint(np.arange(t_len) * (panel_size - 1) / (t_len - 1)).astype(np.int64)
    draw_markers = t_len <= panel_size / 4
    for var in range(m):
        oy = (var // cols) * panel_size
        ox = (var % cols) * panel_size
        ys = _panel_rows(values[var], panel_size)
        r, g, b = palette[var]
        kernels.draw_polyline(pixels, oy, ox, panel_size, xs, ys, np.uint8(r), np.uint8(g), np.uint8(b))
        if draw_markers:
            kernels.stamp_markers(pixels, oy, ox, panel_size, xs, ys, np.uint8(r), np.uint8(g), np.uint8(b))
    return RasterImage(pixels=pixels, panel_size=panel_size, rows=rows, cols=cols)


def save_png(image: RasterImage, path) -> Path:
    from PIL import Image

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image.pixels, mode="RGB").save(path)
    return path
