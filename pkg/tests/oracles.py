"""Slow reference implementations that avoid the FFT code path entirely."""

import itertools

import numpy as np


def discrete_kernel(shape, tau):
    """Periodic heat kernel on the grid as an explicit cosine sum over integer frequencies."""
    out = np.zeros(shape)
    freqs = [np.arange(-n // 2, n // 2) for n in shape]
    idx = np.indices(shape)
    for xi in itertools.product(*freqs):
        weight = np.exp(-tau * sum(f * f for f in xi))
        phase = sum(2 * np.pi * f * j / n for f, j, n in zip(xi, idx, shape))
        out += weight * np.cos(phase)
    return out / np.prod(shape)


def direct_convolve(u, tau):
    """O(N^2) circular convolution with :func:`discrete_kernel`."""
    u = np.asarray(u, dtype=float)
    k = discrete_kernel(u.shape, tau)
    out = np.zeros(u.shape)
    for src in zip(*np.nonzero(u)):
        out += u[src] * np.roll(k, src, axis=tuple(range(u.ndim)))
    return out


def energy_hat_oracle(stack, tau, cell_vol):
    total = 0.0
    for i, j in itertools.permutations(range(len(stack)), 2):
        total += np.sum(stack[i] * direct_convolve(stack[j], tau))
    return np.sqrt(np.pi / tau) * total * cell_vol


def dominant_oracle(u_omega, stack, tau):
    g = np.array([direct_convolve(s, tau / 2) for s in stack])
    s = g.sum(axis=0)
    sq = np.sqrt(np.maximum(s, 0.0))
    cross = direct_convolve(sq * (2 * u_omega - 1), tau / 2)
    return np.sqrt(np.pi / tau) * (s - np.sum(g * g, axis=0) + sq * cross)
