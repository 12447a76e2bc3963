"""Straight-line scalar re-implementations used as independent test oracles.

Everything here is deliberately naive: python loops, math.exp, no masking or
log-sum-exp tricks, no shared code with the package implementations.
"""

import math

import numpy as np


def oracle_temperatures(d_within, d_cross, tau0):
    g = len(d_within)
    tau_w = [[tau0] * g for _ in range(g)]
    tau_c = [[tau0] * g for _ in range(g)]
    for matrix, out in ((d_within, tau_w), (d_cross, tau_c)):
        for j in range(g):
            denom = sum(math.exp(matrix[j][k]) for k in range(g) if k != j)
            for k in range(g):
                if k != j and denom > 0:
                    out[j][k] = tau0 + math.exp(matrix[j][k]) / denom
    return np.array(tau_w), np.array(tau_c)


def oracle_intra(v, vt, tau_w, tau_c):
    g = len(v)
    total = 0.0
    for k in range(g):
        denom = 0.0
        for j in range(g):
            if j != k:
                denom += math.exp(np.dot(v[k], v[j]) / tau_w[k][j])
            denom += math.exp(np.dot(v[k], vt[j]) / tau_c[k][j])
        numer = math.exp(np.dot(v[k], vt[k]) / tau_c[k][k])
        total += -math.log(numer / denom)
    return total


def oracle_inter(z, zt, tau):
    b = len(z)
    per_sample = []
    for i in range(b):
        denom = 0.0
        for j in range(b):
            if j != i:
                denom += math.exp(np.dot(z[i], z[j]) / tau)
            denom += math.exp(np.dot(z[i], zt[j]) / tau)
        per_sample.append(-math.log(math.exp(np.dot(z[i], zt[i]) / tau) / denom))
    return per_sample


def oracle_naive(u, v, tau):
    b = len(u)
    total = 0.0
    for i in range(b):
        num = math.exp(np.dot(u[i], v[i]) / tau)
        denom_is = sum(math.exp(np.dot(u[i], v[j]) / tau) for j in range(b))
        denom_si = sum(math.exp(np.dot(v[i], u[j]) / tau) for j in range(b))
        total += -math.log(num / denom_is) - math.log(num / denom_si)
    return total / (2 * b)


def oracle_slerp(u, v, lam):
    theta = math.acos(max(-1.0, min(1.0, float(np.dot(u, v)))))
    if theta < 1e-6:
        mixed = lam * np.asarray(u) + (1 - lam) * np.asarray(v)
        return mixed / np.linalg.norm(mixed)
    return (
        np.asarray(u) * math.sin(lam * theta) / math.sin(theta)
        + np.asarray(v) * math.sin((1 - lam) * theta) / math.sin(theta)
    )


def oracle_mix(u, v, lams, tau):
    b = len(u)
    mixed = [oracle_slerp(u[j], v[j], lams[j]) for j in range(b)]
    total = 0.0
    for i in range(b):
        num = math.exp(np.dot(u[i], v[i]) / tau)
        denom_im = sum(math.exp(np.dot(u[i], mixed[j]) / tau) for j in range(b))
        denom_sm = sum(math.exp(np.dot(v[i], mixed[j]) / tau) for j in range(b))
        total += -math.log(num / denom_im) - math.log(num / denom_sm)
    return total / (2 * b)


def oracle_ranks(row):
    """Fractional ranks (1 = best accuracy) by brute-force sorting."""
    row = list(row)
    ranks = []
    for value in row:
        better = sum(1 for other in row if other > value)
        equal = sum(1 for other in row if other == value)
        ranks.append(better + (equal + 1) / 2.0)
    return ranks


def central_difference(func, array, h=1e-5):
    """Central finite-difference gradient of a scalar function of an array."""
    array = np.asarray(array, dtype=np.float64)
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = func(array)
        flat[i] = orig - h
        lo = func(array)
        flat[i] = orig
        out[i] = (hi - lo) / (2 * h)
    return grad


def relative_error(got, want, floor=1e-8):
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    scale = np.maximum(np.abs(want), floor)
    return float(np.max(np.abs(got - want) / scale))
