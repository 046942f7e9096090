"""Volume-constrained shortest partitions of a fixed region by auction dynamics.

Each outer step linearises the heat content around the current partition,
which turns the update into an assignment problem: every active cell ``x``
is worth ``a_i(x) = 1 - sum_{j != i} (G_tau * u_j)(x)`` to phase ``i`` and
phase ``i`` must receive exactly ``V_i`` cells.  The assignment is solved by
a forward auction with epsilon scaling, warm-starting prices between rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .fields import IndicatorField, Partition
from .rng import SplitMix64
from .spectral import convolve_stack

__all__ = [
    "AuctionParams",
    "AuctionError",
    "volume_targets",
    "random_partition",
    "compute_coefficients",
    "membership_auction",
    "auction_dynamics",
    "assignment_value",
]


class AuctionError(RuntimeError):
    pass


@dataclass(frozen=True)
class AuctionParams:
    """Stopping parameters ``(m, eps_min, alpha, eps0)``."""

    m: int = 1000
    eps_min: float = 1e-7
    alpha: float = 4.0
    eps0: float = 0.1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not (self.eps_min > 0 and self.eps0 >= self.eps_min):
            raise ValueError("need 0 < eps_min <= eps0")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")


def volume_targets(c: Sequence[float], active_cells: int) -> np.ndarray:
    """Integer cell counts per phase by largest remainder (ties to the lower index)."""
    c = np.asarray(c, dtype=np.float64)
    n = len(c)
    if n < 1 or (c <= 0).any() or abs(c.sum() - 1.0) > 1e-12:
        raise ValueError(f"proportions must be positive and sum to 1, got {c.tolist()}")
    if active_cells < n:
        raise AuctionError(f"{active_cells} active cells cannot hold {n} nonempty phases")
    raw = c * active_cells
    targets = np.floor(raw).astype(np.int64)
    short = active_cells - int(targets.sum())
    # stable sort on -remainder gives the lower index first among equal remainders
    order = np.argsort(-(raw - targets), kind="stable")
    targets[order[:short]] += 1
    # tiny proportions on small supports: borrow from the largest phase
    while (targets < 1).any():
        targets[np.argmax(targets)] -= 1
        targets[np.argmin(targets)] += 1
    return targets


def random_partition(support: IndicatorField, targets: Sequence[int], seed: int) -> Partition:
    """Shuffle the support cells with SplitMix64 and deal them out in phase order."""
    targets = np.asarray(targets, dtype=np.int64)
    cells = support.cells()
    if targets.sum() != len(cells) or (targets < 0).any():
        raise AuctionError(f"targets {targets.tolist()} do not fit {len(cells)} support cells")
    shuffled = SplitMix64(seed).shuffle(cells)
    labels = np.full(support.spec.size, -1, dtype=np.int16)
    labels[shuffled] = np.repeat(np.arange(len(targets), dtype=np.int16), targets)
    return Partition(support.spec, len(targets), labels)


def compute_coefficients(p: Partition, tau: float) -> np.ndarray:
    """Assignment coefficients ``a_i = 1 - sum_{j != i} G_tau * u_j`` as an ``(n, *grid)`` array."""
    conv = convolve_stack(p.stack(), tau)
    return 1.0 - (conv.sum(axis=0) - conv)


def assignment_value(coeff: np.ndarray, p: Partition) -> float:
    """``sum_x a_{label(x)}(x)`` over the assigned cells."""
    lab = p.labels
    mask = lab >= 0
    return float(np.take_along_axis(coeff[:, mask], lab[mask][None, :].astype(np.int64), axis=0).sum())


# -- auction kernel ----------------------------------------------------------
#
# Members of each phase sit in a binary min-heap keyed on (bid, cell) so the
# eviction victim is the lowest bid, ties going to the lower cell index.


@numba.njit(cache=True, nogil=True)
def _less(b1, c1, b2, c2):
    return b1 < b2 or (b1 == b2 and c1 < c2)


@numba.njit(cache=True, nogil=True)
def _heap_push(hb, hc, size, bid, cell):
    k = size
    hb[k] = bid
    hc[k] = cell
    while k > 0:
        parent = (k - 1) >> 1
        if _less(hb[k], hc[k], hb[parent], hc[parent]):
            hb[k], hb[parent] = hb[parent], hb[k]
            hc[k], hc[parent] = hc[parent], hc[k]
            k = parent
        else:
            break


@numba.njit(cache=True, nogil=True)
def _heap_pop(hb, hc, size):
    cell = hc[0]
    last = size - 1
    hb[0] = hb[last]
    hc[0] = hc[last]
    k = 0
    while True:
        left = 2 * k + 1
        if left >= last:
            break
        child = left
        right = left + 1
        if right < last and _less(hb[right], hc[right], hb[left], hc[left]):
            child = right
        if _less(hb[child], hc[child], hb[k], hc[k]):
            hb[k], hb[child] = hb[child], hb[k]
            hc[k], hc[child] = hc[child], hc[k]
            k = child
        else:
            break
    return cell


@numba.njit(cache=True, nogil=True)
def _auction_kernel(a, targets, prices, eps, check):
    """Forward auction on ``a[x, i]``; returns ``(owner, bids, n_bids, status)``.

    ``prices`` is updated in place.  ``status`` is 0 on success and 1 when an
    instrumented run (``check``) found a bookkeeping violation.
    """
    N, n = a.shape
    owner = np.full(N, -1, np.int64)
    bids = np.zeros(N)
    cap = 1
    for i in range(n):
        cap = max(cap, targets[i])
    hb = np.empty((n, cap))
    hc = np.empty((n, cap), np.int64)
    size = np.zeros(n, np.int64)
    n_bids = 0

    if n == 1:
        lo = np.inf
        for x in range(N):
            owner[x] = 0
            lo = min(lo, a[x, 0])
        prices[0] = lo + eps
        bids[:] = prices[0]
        return owner, bids, N, 0

    queue = np.arange(N)
    nq = N
    nxt = np.empty(N, np.int64)
    while nq > 0:
        nn = 0
        for qi in range(nq):
            x = queue[qi]
            best = -1
            second = -1
            bv = -np.inf
            sv = -np.inf
            for i in range(n):
                v = a[x, i] - prices[i]
                if v > bv:
                    second = best
                    sv = bv
                    best = i
                    bv = v
                elif v > sv:
                    second = i
                    sv = v
            b = prices[best] + eps + bv - sv
            n_bids += 1
            if size[best] == targets[best]:
                y = _heap_pop(hb[best], hc[best], size[best])
                owner[y] = -1
                nxt[nn] = y
                nn += 1
                _heap_push(hb[best], hc[best], size[best] - 1, b, x)
                owner[x] = best
                bids[x] = b
                prices[best] = hb[best, 0]
            else:
                _heap_push(hb[best], hc[best], size[best], b, x)
                size[best] += 1
                owner[x] = best
                bids[x] = b
                if size[best] == targets[best]:
                    prices[best] = hb[best, 0]
            if check:
                counts = np.zeros(n, np.int64)
                for z in range(N):
                    if owner[z] >= 0:
                        counts[owner[z]] += 1
                for i in range(n):
                    if counts[i] != size[i] or size[i] > targets[i]:
                        return owner, bids, n_bids, 1
                if second < 0:
                    return owner, bids, n_bids, 1
        queue[:nn] = np.sort(nxt[:nn])
        nq = nn
    return owner, bids, n_bids, 0


def _active_coefficients(coeff: np.ndarray, support: IndicatorField) -> np.ndarray:
    return np.ascontiguousarray(coeff.reshape(coeff.shape[0], -1)[:, support.values.ravel()].T)


def membership_auction(
    eps: float,
    targets: Sequence[int],
    coeff: np.ndarray,
    p0: Sequence[float],
    support: IndicatorField,
    check: bool = False,
) -> tuple[Partition, np.ndarray]:
    """Assign every support cell to a phase with exact per-phase counts.

    ``coeff`` is an ``(n, *grid)`` array of coefficients; only support cells
    are read.  Unassigned cells bid in canonical order each sweep, evicted
    cells wait for the next sweep.  Returns the partition and final prices.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    targets = np.asarray(targets, dtype=np.int64)
    if targets.sum() != support.count or (targets < 1).any():
        raise AuctionError(f"targets {targets.tolist()} infeasible for {support.count} cells")
    a = _active_coefficients(np.asarray(coeff, dtype=np.float64), support)
    prices = np.array(p0, dtype=np.float64, copy=True)
    owner, _, _, status = _auction_kernel(a, targets, prices, float(eps), check)
    if status:
        raise AuctionError("auction bookkeeping violated (instrumented run)")
    labels = np.full(support.spec.size, -1, dtype=np.int16)
    labels[support.values.ravel()] = owner
    return Partition(support.spec, len(targets), labels), prices


def _scaled_auction(a, targets, params, n):
    prices = np.zeros(n)
    eps = params.eps0
    eps_bar = params.eps_min / n
    owner = None
    while eps >= eps_bar:
        owner, _, _, _ = _auction_kernel(a, targets, prices, eps, False)
        eps /= params.alpha
    return owner


def auction_dynamics(
    support: IndicatorField,
    c: Sequence[float],
    tau: float,
    params: AuctionParams = AuctionParams(),
    seed: int = 0,
    targets: Sequence[int] | None = None,
    initial: Partition | None = None,
) -> Partition:
    """Shortest volume-constrained partition of ``support`` by auction dynamics.

    Starts from ``random_partition(support, targets, seed)`` unless
    ``initial`` is given, and stops after ``params.m`` outer steps or when the
    partition repeats.  The epsilon-scaling loop runs while
    ``eps >= eps_min / n``.
    """
    if support.count == 0:
        raise AuctionError("empty support")
    n = len(c)
    targets = volume_targets(c, support.count) if targets is None else np.asarray(targets, np.int64)
    part = initial if initial is not None else random_partition(support, targets, seed)
    mask = support.values.ravel()
    for _ in range(params.m):
        coeff = compute_coefficients(part, tau)
        a = _active_coefficients(coeff, support)
        owner = _scaled_auction(a, targets, params, n)
        labels = np.full(support.spec.size, -1, dtype=np.int16)
        labels[mask] = owner
        new = Partition(support.spec, n, labels)
        done = new.same_as(part)
        part = new
        if done:
            break
    return part
