"""Series and image encoders, projection heads and checkpoint I/O.

The series encoder is channel independent: every variable runs through the
same univariate dilated-convolution stack and the per-variable vectors are
averaged, so one encoder serves any number of variables.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .data import TimeSeriesSample
from .errors import MalformedFileError, NumericError, ShapeError
from .imaging import RasterImage


class DilatedBlock(nn.Module):
    """Two causal convolutions with exponentially dilated receptive field."""

    def __init__(self, channels: int, dilation: int, kernel_size: int = 3):
        super().__init__()
        self.pad = (kernel_size - 1) * dilation
        self.conv1 = nn.Conv1d(channels, channels, kernel_size, dilation=dilation)
        self.conv2 = nn.Conv1d(channels, channels, kernel_size, dilation=dilation)

    def forward(self, x):
        h = self.conv1(F.pad(F.gelu(x), (self.pad, 0)))
        h = self.conv2(F.pad(F.gelu(h), (self.pad, 0)))
        return x + h


class SeriesEncoder(nn.Module):
    """Dilated convolutional encoder mapping (B, M, T) to (B, repr_dim)."""

    def __init__(self, repr_dim: int = 320, hidden_dim: int = 64, depth: int = 10):
        super().__init__()
        self.repr_dim = repr_dim
        self.input_proj = nn.Conv1d(1, hidden_dim, 1)
        self.blocks = nn.Sequential(
            *[DilatedBlock(hidden_dim, dilation=2**i) for i in range(depth)]
        )
        self.output_proj = nn.Conv1d(hidden_dim, repr_dim, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 3:
            raise ShapeError(f"expected (B, M, T) input, got shape {tuple(x.shape)}")
        if not torch.isfinite(x).all():
            raise NumericError("series input contains non-finite values")
        b, m, t = x.shape
        flat = x.reshape(b * m, 1, t)
        h = self.input_proj(flat)
        h = self.blocks(h)
        h = self.output_proj(h)
        per_variable = h.mean(dim=2)
        return per_variable.reshape(b, m, self.repr_dim).mean(dim=1)


class ResidualStage(nn.Module):
    """Stride-2 residual block with group normalization."""

    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        groups = max(1, min(8, c_out // 4))  # keep >= 4 channels per group
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=2, padding=1)
        self.norm1 = nn.GroupNorm(groups, c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.norm2 = nn.GroupNorm(groups, c_out)
        self.skip = nn.Conv2d(c_in, c_out, 1, stride=2)

    def forward(self, x):
        h = F.gelu(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return F.gelu(h + self.skip(x))


class ImageEncoder(nn.Module):
    """Four-stage residual CNN with global average pooling to repr_dim."""

    def __init__(self, repr_dim: int = 320, base_channels: int = 24):
        super().__init__()
        self.repr_dim = repr_dim
        c = base_channels
        self.stem = nn.Conv2d(3, c, 3, padding=1)
        self.stages = nn.Sequential(
            ResidualStage(c, 2 * c),
            ResidualStage(2 * c, 4 * c),
            ResidualStage(4 * c, 8 * c),
            ResidualStage(8 * c, repr_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected (B, 3, H, W) input, got shape {tuple(x.shape)}")
        if not torch.isfinite(x).all():
            raise NumericError("image input contains non-finite values")
        h = self.stages(F.gelu(self.stem(x)))
        return h.mean(dim=(2, 3))


class ProjectionHead(nn.Module):
    """Two-layer nonlinear map used before every contrastive loss.

    Bias-free so a zero representation projects to exactly zero, which the
    prototype path reports as a numeric error instead of a silent NaN.
    """

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, in_dim, bias=False)
        self.fc2 = nn.Linear(in_dim, out_dim, bias=False)

    def forward(self, x):
        return self.fc2(F.gelu(self.fc1(x)))


def project(rep: torch.Tensor, head: ProjectionHead) -> torch.Tensor:
    """Project a representation and L2-normalize onto the unit sphere."""
    out = head(rep)
    norms = out.norm(dim=-1, keepdim=True)
    if norms.min().item() < 1e-12:
        raise NumericError("projection collapsed to the zero vector; re-seed the run")
    return out / norms


def series_tensor(samples, dtype=torch.float32) -> torch.Tensor:
    """Stack shape-homogeneous samples into a (B, M, T) tensor."""
    if isinstance(samples, torch.Tensor):
        return samples.to(dtype)
    arrays = [s.values if isinstance(s, TimeSeriesSample) else np.asarray(s) for s in samples]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"batch is not shape-homogeneous: {sorted(shapes)}")
    return torch.as_tensor(np.stack(arrays), dtype=dtype)


def images_tensor(images, dtype=torch.float32) -> torch.Tensor:
    """Stack rasterized images into a normalized (B, 3, H, W) float tensor."""
    if isinstance(images, torch.Tensor):
        return images.to(dtype)
    arrays = [im.pixels if isinstance(im, RasterImage) else np.asarray(im) for im in images]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"image batch is not size-homogeneous: {sorted(shapes)}")
    stacked = np.stack(arrays).astype(np.float32) / 255.0
    tensor = torch.as_tensor(stacked, dtype=dtype).permute(0, 3, 1, 2)
    return tensor * 2.0 - 1.0


def _tensor_bytes(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype="<f4").tobytes()


def save_checkpoint(directory, modules: dict[str, nn.Module], config: dict, step: int) -> Path:
    """Write one little-endian float32 binary per parameter plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for module_name, module in modules.items():
        for param_name, param in module.state_dict().items():
            name = f"{module_name}.{param_name}"
            array = param.detach().cpu().numpy()
            blob = _tensor_bytes(array)
            filename = name.replace(".", "_") + ".bin"
            (directory / filename).write_bytes(blob)
            entries.append(
                {
                    "name": name,
                    "shape": list(array.shape),
                    "dtype": "float32",
                    "byte_order": "little",
                    "file": filename,
                    "sha256": hashlib.sha256(blob).hexdigest(),
                }
            )
    manifest = {"format_version": 1, "step": step, "config": config, "tensors": entries}
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return directory


def load_checkpoint(directory) -> tuple[dict[str, np.ndarray], dict, int]:
    """Read a checkpoint directory back into {tensor name: float32 array}."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise MalformedFileError(f"{directory}: missing manifest.json")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    tensors = {}
    for entry in manifest["tensors"]:
        blob = (directory / entry["file"]).read_bytes()
        digest = hashlib.sha256(blob).hexdigest()
        if digest != entry["sha256"]:
            raise MalformedFileError(
                f"{directory}: checksum mismatch for {entry['name']} ({entry['file']})"
            )
        tensors[entry["name"]] = np.frombuffer(blob, dtype="<f4").reshape(entry["shape"]).copy()
    return tensors, manifest.get("config", {}), int(manifest.get("step", 0))


def load_into(modules: dict[str, nn.Module], tensors: dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into live modules (strict name matching)."""
    for module_name, module in modules.items():
        state = {}
        prefix = module_name + "."
        for name, array in tensors.items():
            if name.startswith(prefix):
                state[name[len(prefix) :]] = torch.from_numpy(array)
        missing = set(module.state_dict()) - set(state)
        if missing:
            raise MalformedFileError(f"checkpoint lacks tensors for {module_name}: {sorted(missing)[:3]}")
        module.load_state_dict(state)
