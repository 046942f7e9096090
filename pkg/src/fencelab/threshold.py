"""Region update by volume-preserving thresholding of a dominant function."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import half_step_terms
from .fields import IndicatorField, Partition, ScalarField, set_difference
from .spectral import convolve_array

__all__ = [
    "UpdateSets",
    "dominant_function_1",
    "dominant_function_2",
    "threshold_volume",
    "partial_update",
]


@dataclass(frozen=True)
class UpdateSets:
    """Candidate cells to add (``A``) and drop (``B``), and the subsets actually moved."""

    A: IndicatorField
    B: IndicatorField
    A_tilde: IndicatorField
    B_tilde: IndicatorField
    k_cells: int


def _dominant(uo: np.ndarray, stack: np.ndarray, tau: float) -> np.ndarray:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    g, s, sq = half_step_terms(stack, tau)
    cross = convolve_array(sq * (2.0 * uo - 1.0), tau / 2, clamp=False)
    return np.sqrt(np.pi / tau) * (s - np.sum(g * g, axis=0) + sq * cross)


def dominant_function_1(u_omega: IndicatorField, p: Partition, tau: float) -> ScalarField:
    """Linearisation coefficient of the region functional in ``u_omega``.

    ``sqrt(pi/tau) [S - sum g_i^2 + S^(1/2) G_{tau/2}*(S^(1/2)(2 u_O - 1))]``
    with ``g_i = G_{tau/2}*u_i`` and ``S = sum g_i``.
    """
    return ScalarField(p.spec, _dominant(u_omega.as_float(), p.stack(), tau))


def dominant_function_2(
    u_omega: IndicatorField, p: Partition, tau: float, lam: float, tau_prime: float
) -> ScalarField:
    """``dominant_function_1`` plus the proximal pull ``lam * G_{tau'} * sum u_i``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    stack = p.stack()
    phi = _dominant(u_omega.as_float(), stack, tau)
    if lam:
        if not tau_prime > 0:
            raise ValueError(f"tau_prime must be positive, got {tau_prime}")
        phi = phi + lam * convolve_array(stack.sum(axis=0), tau_prime)
    return ScalarField(p.spec, phi)


def _top_cells(values: np.ndarray, candidates: np.ndarray, k: int, descending: bool) -> np.ndarray:
    # stable sort keeps canonical order among ties
    key = -values[candidates] if descending else values[candidates]
    return candidates[np.argsort(key, kind="stable")[:k]]


def threshold_volume(phi: ScalarField, k_cells: int) -> IndicatorField:
    """Indicator of the ``k_cells`` cells with the largest ``phi`` (ties to lower index)."""
    flat = phi.values.ravel()
    if not 0 <= k_cells <= flat.size:
        raise ValueError(f"k_cells={k_cells} outside 0..{flat.size}")
    chosen = _top_cells(flat, np.arange(flat.size), k_cells, descending=True)
    return IndicatorField.from_cells(phi.spec, chosen)


def partial_update(
    u_prev: IndicatorField, u_process: IndicatorField, phi: ScalarField, beta: float
) -> tuple[IndicatorField, UpdateSets]:
    """Move the ``round(beta |A|)`` best cells of ``A`` in and as many worst cells of ``B`` out.

    ``A = u_process - u_prev`` (ranked by ``phi`` descending) and
    ``B = u_prev - u_process`` (ranked ascending).  Equal counts keep the
    region volume exact.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if u_prev.count != u_process.count:
        raise ValueError(f"volume mismatch: {u_prev.count} vs {u_process.count} cells")
    A = set_difference(u_process, u_prev)
    B = set_difference(u_prev, u_process)
    k = int(np.floor(beta * A.count + 0.5))
    flat = phi.values.ravel()
    add = _top_cells(flat, A.cells(), k, descending=True)
    drop = _top_cells(flat, B.cells(), k, descending=False)
    spec = u_prev.spec
    A_t = IndicatorField.from_cells(spec, add)
    B_t = IndicatorField.from_cells(spec, drop)
    out = u_prev.values.copy().ravel()
    out[add] = True
    out[drop] = False
    return IndicatorField(spec, out.reshape(spec.shape)), UpdateSets(A, B, A_t, B_t, k)
