"""Heat-content approximations of partition length and region perimeter.

All integrals are midpoint sums over cells times ``cell_vol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import IndicatorField, Partition
from .spectral import convolve_array, convolve_stack

__all__ = [
    "EnergyReport",
    "perimeter_estimate",
    "energy_hat",
    "heat_content",
    "energy_tilde",
    "isoperimetric_ratio",
    "averaged_energy",
    "energy_report",
]


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")


@dataclass(frozen=True)
class EnergyReport:
    e_tilde: float
    e_hat: float
    per_omega: float
    iso_ratio: float


def perimeter_estimate(u: IndicatorField, tau: float) -> float:
    """``sqrt(pi/tau) * int u G_tau*(1-u)``, the boundary measure of ``u``."""
    _check_tau(tau)
    if u.count == 0 or u.count == u.spec.size:
        return 0.0
    uf = u.as_float()
    smeared = convolve_array(1.0 - uf, tau)
    return float(np.sqrt(np.pi / tau) * np.sum(uf * smeared) * u.spec.cell_vol)


def _pairwise_overlap(stack: np.ndarray, tau: float) -> float:
    # sum_i int u_i G*(U - u_i) with U = sum_j u_j
    conv = convolve_stack(stack, tau)
    total = conv.sum(axis=0)
    return float(np.sum(stack * (total - conv)))


def energy_hat(p: Partition, tau: float) -> float:
    """Sum over ordered phase pairs ``i != j`` of ``sqrt(pi/tau) int u_i G_tau*u_j``."""
    _check_tau(tau)
    if p.n < 2:
        return 0.0
    return np.sqrt(np.pi / tau) * _pairwise_overlap(p.stack(), tau) * p.spec.cell_vol


def heat_content(p: Partition, tau: float) -> float:
    """Heat content ``tau^(-1/2) sum_{i != j} int u_i G_tau*u_j``."""
    _check_tau(tau)
    if p.n < 2:
        return 0.0
    return _pairwise_overlap(p.stack(), tau) * p.spec.cell_vol / np.sqrt(tau)


def half_step_terms(stack: np.ndarray, tau: float):
    """Shared pieces of the region functional: ``(g, S, sqrt(S))`` at time ``tau/2``.

    ``g`` is the stack of smoothed phases and ``S = sum_i g_i``; the root is taken of ``max(S, 0)``.
    """
    g = convolve_stack(stack, tau / 2)
    s = g.sum(axis=0)
    return g, s, np.sqrt(np.maximum(s, 0.0))


def energy_tilde(u_omega: IndicatorField, p: Partition, tau: float) -> float:
    """Region-restricted partition length used to drive region updates.

    ``sqrt(pi/tau) [ int u_O (S - sum g_i^2) - int u_O S^(1/2) G_{tau/2}*(S^(1/2)(1-u_O)) ]``
    with ``g_i = G_{tau/2}*u_i`` and ``S = sum_i g_i``.
    """
    _check_tau(tau)
    if u_omega.spec != p.spec:
        raise ValueError("region and partition live on different grids")
    uo = u_omega.as_float()
    g, s, sq = half_step_terms(p.stack(), tau)
    first = np.sum(uo * (s - np.sum(g * g, axis=0)))
    second = np.sum(uo * sq * convolve_array(sq * (1.0 - uo), tau / 2))
    return float(np.sqrt(np.pi / tau) * (first - second) * p.spec.cell_vol)


def isoperimetric_ratio(u: IndicatorField, tau: float) -> float:
    """``4 pi |O| / |dO|^2`` in 2D and ``36 pi |O|^2 / |dO|^3`` in 3D; 1 for a disc/ball."""
    if u.count == 0:
        raise ValueError("isoperimetric ratio of an empty region")
    vol = u.count * u.spec.cell_vol
    per = perimeter_estimate(u, tau)
    if u.spec.d == 2:
        return 4 * np.pi * vol / per**2
    return 36 * np.pi * vol**2 / per**3


def averaged_energy(trace: Sequence[float], M: int, k: int) -> float:
    """Mean of trace entries ``k-M+1 .. k`` (1-based positions)."""
    if not 1 <= M <= k:
        raise ValueError(f"need 1 <= M <= k, got M={M}, k={k}")
    if len(trace) < k:
        raise ValueError(f"trace has {len(trace)} entries, need {k}")
    return float(np.mean(np.asarray(trace[k - M : k], dtype=np.float64)))


def energy_report(u_omega: IndicatorField, p: Partition, tau: float) -> EnergyReport:
    return EnergyReport(
        e_tilde=energy_tilde(u_omega, p, tau),
        e_hat=energy_hat(p, tau),
        per_omega=perimeter_estimate(u_omega, tau),
        iso_ratio=isoperimetric_ratio(u_omega, tau),
    )
