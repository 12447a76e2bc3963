"""Contrastive objectives: adaptive temperatures, prototype and series-image losses.

All losses operate on torch tensors so gradients flow to the encoders; the
per-pair temperatures are plain numpy because they depend only on the raw
augmented views, never on trainable parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy.stats import beta as beta_dist

from .augment import view_distance
from .errors import ConfigurationError, ContractError, NumericError


@dataclass
class TemperaturePair:
    """Per-pair temperatures for one sample's view sets (diagonals = tau0)."""

    tau_within: np.ndarray
    tau_cross: np.ndarray
    tau0: float


@dataclass
class LossBreakdown:
    l_intra: float
    l_inter: float
    l_proto: float
    l_naive: float
    l_mix: float
    l_si: float
    l_total: float

    FIELDS = ("l_intra", "l_inter", "l_proto", "l_naive", "l_mix", "l_si", "l_total")

    def as_row(self) -> list[float]:
        return [getattr(self, f) for f in self.FIELDS]


def _check_unit_rows(x: torch.Tensor, name: str, tol: float = 1e-3) -> None:
    norms = x.norm(dim=-1)
    worst = (norms - 1.0).abs().max().item()
    if worst > tol:
        raise ContractError(f"{name} rows must be unit-norm, worst deviation {worst:.3g}")


def _softmax_offdiag(distances: np.ndarray) -> np.ndarray:
    """Row-wise softmax with the diagonal forced to -inf (zero mass there)."""
    d = np.array(distances, dtype=np.float64, copy=True)
    np.fill_diagonal(d, -np.inf)
    if d.shape[0] == 1:
        return np.zeros_like(d)
    mx = d.max(axis=1, keepdims=True)
    e = np.exp(d - mx)
    return e / e.sum(axis=1, keepdims=True)


def temperatures_from_distances(
    d_within: np.ndarray, d_cross: np.ndarray, tau0: float
) -> TemperaturePair:
    if tau0 <= 0:
        raise ConfigurationError(f"tau0 must be positive, got {tau0}")
    d_within = np.asarray(d_within, dtype=np.float64)
    d_cross = np.asarray(d_cross, dtype=np.float64)
    if d_within.shape != d_cross.shape or d_within.ndim != 2 or d_within.shape[0] != d_within.shape[1]:
        raise ConfigurationError("distance matrices must both be G x G")
    return TemperaturePair(
        tau_within=tau0 + _softmax_offdiag(d_within),
        tau_cross=tau0 + _softmax_offdiag(d_cross),
        tau0=tau0,
    )


def adaptive_temperatures(views_a, views_b, tau0: float) -> TemperaturePair:
    """Per-pair temperatures from input-space view distances.

    Within-set and cross-set distance matrices are mapped through a row-wise
    softmax (diagonal pinned to -inf so positive pairs keep exactly tau0) and
    added to the base temperature.
    """
    g = len(views_a)
    if g == 0 or len(views_b) != g:
        raise ConfigurationError("need two equal, nonempty view sets")
    d_within = np.zeros((g, g))
    d_cross = np.zeros((g, g))
    for j in range(g):
        for k in range(g):
            if j != k:
                d_within[j, k] = view_distance(views_a[j], views_a[k])
            d_cross[j, k] = view_distance(views_a[j], views_b[k])
    return temperatures_from_distances(d_within, d_cross, tau0)


def intra_prototype_loss(
    v: torch.Tensor, v_tilde: torch.Tensor, taus: TemperaturePair
) -> torch.Tensor:
    """Contrast among one sample's 2G views with per-pair temperatures.

    Anchors run over the first view set; the positive for anchor k is its
    twin in the second set, every other view of the same sample is a
    negative scaled by its own temperature.
    """
    if v.shape != v_tilde.shape or v.ndim != 2:
        raise ContractError(f"view projections must share a G x J shape, got {tuple(v.shape)}")
    _check_unit_rows(v, "v")
    _check_unit_rows(v_tilde, "v_tilde")
    tau_w = torch.as_tensor(taus.tau_within, dtype=v.dtype, device=v.device)
    tau_c = torch.as_tensor(taus.tau_cross, dtype=v.dtype, device=v.device)
    s_within = (v @ v.T) / tau_w
    s_cross = (v @ v_tilde.T) / tau_c
    eye = torch.eye(v.shape[0], dtype=torch.bool, device=v.device)
    s_within = s_within.masked_fill(eye, float("-inf"))
    logits = torch.cat([s_within, s_cross], dim=1)
    return (torch.logsumexp(logits, dim=1) - s_cross.diagonal()).sum()


def make_prototype(r_views: torch.Tensor, projection) -> torch.Tensor:
    """Project the mean view representation onto the unit sphere.

    Accepts (G, H) for one sample or (B, G, H) for a batch.
    """
    mean = r_views.mean(dim=-2)
    projected = projection(mean)
    norms = projected.norm(dim=-1, keepdim=True)
    if norms.min().item() < 1e-12:
        raise NumericError("prototype projection collapsed to the zero vector")
    return projected / norms


def inter_prototype_loss(
    z: torch.Tensor, z_tilde: torch.Tensor, tau: float, reduction: str = "mean"
) -> torch.Tensor:
    """InfoNCE between the two prototypes of each sample across the batch."""
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if z.shape != z_tilde.shape or z.ndim != 2:
        raise ContractError(f"prototypes must share a B x J shape, got {tuple(z.shape)}")
    _check_unit_rows(z, "z")
    _check_unit_rows(z_tilde, "z_tilde")
    s_zz = (z @ z.T) / tau
    s_zt = (z @ z_tilde.T) / tau
    eye = torch.eye(z.shape[0], dtype=torch.bool, device=z.device)
    logits = torch.cat([s_zz.masked_fill(eye, float("-inf")), s_zt], dim=1)
    per_sample = torch.logsumexp(logits, dim=1) - s_zt.diagonal()
    return per_sample.mean() if reduction == "mean" else per_sample


def prototype_loss(l_inter_i, l_intra_i, alpha: float) -> torch.Tensor:
    """Blend the per-sample inter and intra terms: (1/2B) sum of the mix."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must be in [0, 1], got {alpha}")
    l_inter_i = torch.as_tensor(l_inter_i) if not torch.is_tensor(l_inter_i) else l_inter_i
    l_intra_i = torch.as_tensor(l_intra_i) if not torch.is_tensor(l_intra_i) else l_intra_i
    if l_inter_i.shape != l_intra_i.shape:
        raise ContractError("per-sample loss vectors must have equal length")
    return 0.5 * (alpha * l_inter_i + (1.0 - alpha) * l_intra_i).mean()


def naive_si_loss(
    u: torch.Tensor, v: torch.Tensor, tau: float, reduction: str = "mean"
) -> torch.Tensor:
    """Symmetric cross-modal InfoNCE between image rows u and series rows v."""
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if u.shape != v.shape or u.ndim != 2:
        raise ContractError(f"u and v must share a B x J shape, got {tuple(u.shape)}")
    _check_unit_rows(u, "u")
    _check_unit_rows(v, "v")
    sims = (u @ v.T) / tau
    pos = sims.diagonal()
    l_image_anchor = torch.logsumexp(sims, dim=1) - pos
    l_series_anchor = torch.logsumexp(sims, dim=0) - pos
    per_sample = 0.5 * (l_image_anchor + l_series_anchor)
    return per_sample.mean() if reduction == "mean" else per_sample


def geodesic_mixup(u: torch.Tensor, v: torch.Tensor, lam) -> torch.Tensor:
    """Interpolate unit vectors along their great-circle arc (lam=1 -> u).

    Accepts single vectors or (B, J) batches with per-row coefficients.
    Near-parallel pairs fall back to normalized linear interpolation;
    near-antipodal pairs have no unique arc and raise.
    """
    single = u.ndim == 1
    if single:
        u = u[None, :]
        v = v[None, :]
    _check_unit_rows(u, "u", tol=1e-4)
    _check_unit_rows(v, "v", tol=1e-4)
    lam_t = torch.as_tensor(lam, dtype=u.dtype, device=u.device).reshape(-1)
    if lam_t.numel() == 1:
        lam_t = lam_t.expand(u.shape[0])
    if ((lam_t < 0) | (lam_t > 1)).any():
        raise ConfigurationError("mixing coefficients must lie in [0, 1]")
    dot = (u * v).sum(dim=1).clamp(-1.0, 1.0)
    theta = torch.arccos(dot)
    if (theta > np.pi - 1e-6).any():
        raise NumericError("antipodal pair: geodesic direction is ambiguous")
    parallel = theta < 1e-6
    theta_safe = torch.where(parallel, torch.ones_like(theta), theta)
    lam_col = lam_t[:, None]
    sin_theta = torch.sin(theta_safe)[:, None]
    mixed = (
        u * (torch.sin(lam_col * theta_safe[:, None]) / sin_theta)
        + v * (torch.sin((1.0 - lam_col) * theta_safe[:, None]) / sin_theta)
    )
    if parallel.any():
        lerp = lam_col * u + (1.0 - lam_col) * v
        lerp = lerp / lerp.norm(dim=1, keepdim=True)
        mixed = torch.where(parallel[:, None], lerp, mixed)
    return mixed[0] if single else mixed


def sample_mixup_lambdas(rng: np.random.Generator, gamma: float, n: int) -> np.ndarray:
    """Beta(gamma, gamma) draws via inverse CDF on the shared rng stream."""
    if gamma <= 0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    return beta_dist.ppf(rng.random(n), gamma, gamma)


def mixup_si_loss(
    u: torch.Tensor,
    v: torch.Tensor,
    gamma: float,
    tau: float,
    rng: np.random.Generator | None = None,
    lambdas=None,
    detach_negatives: bool = False,
    reduction: str = "mean",
) -> torch.Tensor:
    """Cross-modal contrast against geodesic mixes of each pair as negatives.

    Positive logits are the original series-image pairs; the negative set for
    every anchor is the batch of mixed representations m_{lambda_j}(u_j, v_j).
    """
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] < 2:
        raise ContractError(f"u and v must share a B x J shape with B >= 2, got {tuple(u.shape)}")
    _check_unit_rows(u, "u")
    _check_unit_rows(v, "v")
    if lambdas is None:
        if rng is None:
            raise ConfigurationError("mixup needs either an rng or explicit lambdas")
        lambdas = sample_mixup_lambdas(rng, gamma, u.shape[0])
    mixed = geodesic_mixup(u, v, lambdas)
    if detach_negatives:
        mixed = mixed.detach()
    pos = (u * v).sum(dim=1) / tau
    l_image_anchor = torch.logsumexp((u @ mixed.T) / tau, dim=1) - pos
    l_series_anchor = torch.logsumexp((v @ mixed.T) / tau, dim=1) - pos
    per_sample = 0.5 * (l_image_anchor + l_series_anchor)
    return per_sample.mean() if reduction == "mean" else per_sample


def si_loss(l_naive, l_mix, beta: float):
    """Blend the naive and mixup series-image losses."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigurationError(f"beta must be in [0, 1], got {beta}")
    return beta * l_naive + (1.0 - beta) * l_mix


def total_loss(l_proto, l_si):
    return l_proto + l_si
