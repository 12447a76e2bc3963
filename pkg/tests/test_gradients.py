"""Analytic gradients of every loss against central finite differences.

Per-pair temperatures are data statistics computed from the raw views before
any gradient tape starts, so both sides hold them fixed.
"""

import numpy as np
import pytest
import torch

from tsvista.losses import (
    inter_prototype_loss,
    intra_prototype_loss,
    mixup_si_loss,
    naive_si_loss,
    prototype_loss,
    si_loss,
    temperatures_from_distances,
    total_loss,
)
from tsvista.pipeline import ExperimentConfig, build_models, step_losses

from conftest import random_unit_rows
from oracles import central_difference

TAU = 0.4
ALPHA, BETA, GAMMA = 0.7, 0.9, 0.1


def spread_unit_rows(rng, n, dim):
    """Unit rows with pairwise |dot| away from 1 (keeps arccos well-behaved)."""
    while True:
        rows = random_unit_rows(rng, n, dim)
        dots = rows @ rows.T
        if np.abs(dots - np.eye(n)).max() < 0.95:
            return rows


def check_grad(make_loss, arrays, tol=1e-4, h=1e-5):
    """Compare autograd and central differences for every input array."""
    tensors = [torch.tensor(a, dtype=torch.float64, requires_grad=True) for a in arrays]
    loss = make_loss(*tensors)
    loss.backward()
    for idx, tensor in enumerate(tensors):
        def scalar(perturbed, idx=idx):
            frozen = [
                torch.as_tensor(perturbed if i == idx else arrays[i], dtype=torch.float64)
                for i in range(len(arrays))
            ]
            with torch.no_grad():
                return float(make_loss(*frozen))

        fd = central_difference(scalar, np.array(arrays[idx], dtype=np.float64), h=h)
        analytic = tensor.grad.numpy()
        scale = max(np.abs(fd).max(), 1e-6)
        assert np.abs(analytic - fd).max() / scale < tol, f"input {idx}"


def random_taus(rng, g):
    return temperatures_from_distances(rng.uniform(0, 2, (g, g)), rng.uniform(0, 2, (g, g)), 0.1)


def test_intra_loss_gradients(rng):
    for _ in range(6):
        g, j = int(rng.integers(2, 4)), int(rng.integers(3, 9))
        taus = random_taus(rng, g)
        check_grad(
            lambda v, vt: intra_prototype_loss(v, vt, taus),
            [spread_unit_rows(rng, g, j), spread_unit_rows(rng, g, j)],
        )


def test_inter_loss_gradients(rng):
    for _ in range(6):
        b, j = int(rng.integers(2, 5)), int(rng.integers(3, 9))
        check_grad(
            lambda z, zt: inter_prototype_loss(z, zt, TAU),
            [spread_unit_rows(rng, b, j), spread_unit_rows(rng, b, j)],
        )


def test_naive_loss_gradients(rng):
    for _ in range(6):
        b, j = int(rng.integers(2, 5)), int(rng.integers(3, 9))
        check_grad(
            lambda u, v: naive_si_loss(u, v, TAU),
            [spread_unit_rows(rng, b, j), spread_unit_rows(rng, b, j)],
        )


def test_mixup_loss_gradients(rng):
    for _ in range(6):
        b, j = int(rng.integers(2, 5)), int(rng.integers(3, 9))
        lams = rng.uniform(0.1, 0.9, b)
        check_grad(
            lambda u, v: mixup_si_loss(u, v, GAMMA, TAU, lambdas=lams),
            [spread_unit_rows(rng, b, j), spread_unit_rows(rng, b, j)],
        )


def test_proto_and_total_gradients(rng):
    for _ in range(4):
        b, g, j = int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(3, 8))
        taus = [random_taus(rng, g) for _ in range(b)]
        lams = rng.uniform(0.1, 0.9, b)

        def proto(v_all, vt_all, z, zt):
            intra = torch.stack(
                [intra_prototype_loss(v_all[i], vt_all[i], taus[i]) for i in range(b)]
            )
            inter = inter_prototype_loss(z, zt, TAU, reduction="none")
            return prototype_loss(inter, intra, ALPHA)

        v_all = np.stack([spread_unit_rows(rng, g, j) for _ in range(b)])
        vt_all = np.stack([spread_unit_rows(rng, g, j) for _ in range(b)])
        z, zt = spread_unit_rows(rng, b, j), spread_unit_rows(rng, b, j)
        check_grad(proto, [v_all, vt_all, z, zt])

        def full(v_all, vt_all, z, zt, u, v):
            l_si = si_loss(
                naive_si_loss(u, v, TAU),
                mixup_si_loss(u, v, GAMMA, TAU, lambdas=lams),
                BETA,
            )
            return total_loss(proto(v_all, vt_all, z, zt), l_si)

        u, v = spread_unit_rows(rng, b, j), spread_unit_rows(rng, b, j)
        check_grad(full, [v_all, vt_all, z, zt, u, v])


def test_end_to_end_micro_batch_gradients(rng):
    """Loss -> encoder-input gradients on a B=2, G=2 micro batch at float64."""
    from tsvista.losses import adaptive_temperatures, sample_mixup_lambdas

    config = ExperimentConfig(
        batch_size=2,
        repr_dim=12,
        hidden_dim=8,
        depth=2,
        proj_dim=6,
        image_channels=4,
        panel_size=16,
        seed=5,
    )
    models = build_models(config)
    for model in models.values():
        model.double().train()

    b, g, m, t = 2, 2, 1, 16
    views_a_arr = rng.standard_normal((b, g, m, t))
    views_b_arr = rng.standard_normal((b, g, m, t))
    originals_arr = rng.standard_normal((b, m, t))
    images_arr = rng.uniform(-1, 1, (b, 3, 16, 16))
    temperatures = [
        adaptive_temperatures(list(views_a_arr[i, :, 0:1]), list(views_b_arr[i, :, 0:1]), 0.1)
        for i in range(b)
    ]
    lambdas = sample_mixup_lambdas(np.random.default_rng(0), config.gamma, b)

    def loss_of(va, vb, orig, img):
        out = step_losses(models, va, vb, orig, img, temperatures, lambdas, config)
        return out["l_total"]

    tensors = [
        torch.tensor(a, dtype=torch.float64, requires_grad=True)
        for a in (views_a_arr, views_b_arr, originals_arr, images_arr)
    ]
    loss_of(*tensors).backward()

    h = 1e-5
    arrays = [views_a_arr, views_b_arr, originals_arr, images_arr]
    for idx, tensor in enumerate(tensors):
        base = arrays[idx]
        coords = [tuple(rng.integers(0, s) for s in base.shape) for _ in range(6)]
        for c in coords:
            hi = base.copy()
            hi[c] += h
            lo = base.copy()
            lo[c] -= h
            with torch.no_grad():
                frozen_hi = [
                    torch.as_tensor(hi if i == idx else arrays[i], dtype=torch.float64)
                    for i in range(4)
                ]
                frozen_lo = [
                    torch.as_tensor(lo if i == idx else arrays[i], dtype=torch.float64)
                    for i in range(4)
                ]
                fd = (float(loss_of(*frozen_hi)) - float(loss_of(*frozen_lo))) / (2 * h)
            analytic = tensor.grad.numpy()[c]
            denom = max(abs(fd), 1e-5)
            assert abs(analytic - fd) / denom < 1e-3, f"input {idx} coord {c}"
