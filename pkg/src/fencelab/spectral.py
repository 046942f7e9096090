"""Periodic Gaussian convolution through the Fourier multiplier ``exp(-tau |xi|^2)``.

On ``[-pi, pi]^d`` the frequencies are integers, and the multiplier is the
Fourier transform of ``G_tau(x) = (4 pi tau)^(-d/2) exp(-|x|^2 / (4 tau))``, so
``gaussian_convolve(u, tau)`` is the exact periodic heat semigroup at time
``tau`` applied to the trigonometric interpolant of ``u``.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .fields import ScalarField

__all__ = [
    "heat_multiplier",
    "convolve_array",
    "gaussian_convolve",
    "semigroup_property_check",
    "convolve_stack",
    "fft_workers",
]

CLAMP_REL = 1e-10


def fft_workers() -> int:
    """Thread count for FFTs, capped by ``FENCELAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("FENCELAB_THREADS", "1")))
    except ValueError:
        return 1


@lru_cache(maxsize=64)
def heat_multiplier(shape: tuple[int, ...], tau: float) -> np.ndarray:
    """Multiplier on the ``rfftn`` half-spectrum of a grid of the given shape."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    # integer frequencies; the Nyquist bin is -n/2, which is even-symmetric anyway
    freqs = [sfft.fftfreq(n, 1.0 / n) for n in shape[:-1]]
    freqs.append(sfft.rfftfreq(shape[-1], 1.0 / shape[-1]))
    grids = np.meshgrid(*freqs, indexing="ij", sparse=True)
    xi2 = sum(g**2 for g in grids)
    mult = np.exp(-tau * xi2)
    mult.setflags(write=False)
    return mult


def _clamp(out: np.ndarray, scale: float) -> None:
    out[(out < 0) & (out > -CLAMP_REL * scale)] = 0.0


def convolve_array(u: np.ndarray, tau: float, clamp: bool | None = None) -> np.ndarray:
    """``G_tau * u`` for a real grid array ``u``.

    With ``clamp`` (the default for nonnegative input) roundoff negatives
    above ``-CLAMP_REL * max|u|`` are set to zero.  Larger negative lobes
    only occur when ``tau`` is under-resolved and are left alone.
    """
    u = np.asarray(u, dtype=np.float64)
    mult = heat_multiplier(u.shape, float(tau))
    w = fft_workers()
    out = sfft.irfftn(sfft.rfftn(u, workers=w) * mult, s=u.shape, workers=w)
    if clamp is None:
        clamp = u.size == 0 or u.min() >= 0
    if clamp:
        _clamp(out, np.abs(u).max(initial=0.0))
    return out


def gaussian_convolve(u: ScalarField, tau: float) -> ScalarField:
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return ScalarField(u.spec, convolve_array(u.values, tau))


def semigroup_property_check(u: ScalarField, tau: float) -> float:
    """Max-norm of ``G_{tau/2} * (G_{tau/2} * u) - G_tau * u``."""
    half = convolve_array(convolve_array(u.values, tau / 2, clamp=False), tau / 2, clamp=False)
    full = convolve_array(u.values, tau, clamp=False)
    return float(np.abs(half - full).max())

def convolve_stack(stack: np.ndarray, tau: float) -> np.ndarray:
    """Convolve every field of a ``(n, *grid)`` stack of nonnegative fields."""
    stack = np.asarray(stack, dtype=np.float64)
    axes = tuple(range(1, stack.ndim))
    mult = heat_multiplier(stack.shape[1:], float(tau))
    w = fft_workers()
    out = sfft.irfftn(sfft.rfftn(stack, axes=axes, workers=w) * mult, s=stack.shape[1:], axes=axes, workers=w)
    _clamp(out, np.abs(stack).max(initial=0.0))
    return out
