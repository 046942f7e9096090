"""Alternating region / partition iterations for longest minimal length partitions.

Every method alternates two steps:

1. with the partition fixed, move the region towards larger partition
   length by thresholding a dominant function, keeping its volume;
2. with the region fixed, recompute a shortest partition by auction dynamics.

``method_one`` keeps the best of ``p`` auction runs per iteration,
``method_two`` runs one auction but adds a proximal pull to the dominant
function, and ``method_monotone`` only accepts iterates that do not lower
the region functional.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .auction import AuctionParams, auction_dynamics, volume_targets
from .energy import averaged_energy, energy_hat, energy_tilde
from .fields import GridSpec, IndicatorField, Partition, equal
from .spectral import fft_workers
from .threshold import dominant_function_1, dominant_function_2, partial_update, threshold_volume

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolveResult",
    "paper_preset",
    "best_of_p",
    "beta_controller",
    "method_one",
    "method_two",
    "method_monotone",
    "solve",
]

log = logging.getLogger(__name__)

Method = Literal["one", "two", "monotone"]


@dataclass(frozen=True)
class SolverConfig:
    method: Method = "one"
    tau: float = 0.05
    tau_prime: float = 0.0125
    lam: float = 10.0
    c: tuple[float, ...] = (0.5, 0.5)
    beta0: float = 1.0
    gamma: float = 0.5
    beta_min: float = 0.05
    M: int = 5
    r_tol: float = 1e-4
    p: int = 5
    auction: AuctionParams = AuctionParams()
    seed: int = 0
    max_iter: int = 500
    # objective-monotone schedule
    gamma_mono: float = 0.5
    beta_floor: float = 1 / 64
    p_check: int = 10

    def __post_init__(self):
        c = tuple(float(x) for x in self.c)
        object.__setattr__(self, "c", c)
        if self.method not in ("one", "two", "monotone"):
            raise ValueError(f"unknown method {self.method!r}")
        if any(x <= 0 for x in c) or abs(sum(c) - 1) > 1e-12:
            raise ValueError(f"proportions must be positive and sum to 1, got {c}")
        if not (self.tau > 0 and self.tau_prime > 0):
            raise ValueError("tau and tau_prime must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not 0 < self.gamma < 1 or not 0 < self.gamma_mono < 1:
            raise ValueError("decay factors must lie in (0, 1)")
        if not 0 <= self.beta0 <= 1 or not 0 < self.beta_min < 1:
            raise ValueError("need 0 <= beta0 <= 1 and 0 < beta_min < 1")
        if self.M < 1 or self.p < 1 or self.p_check < 1 or self.r_tol <= 0:
            raise ValueError("M, p, p_check must be >= 1 and r_tol > 0")

    @property
    def n(self) -> int:
        return len(self.c)


def paper_preset(name: str, n_axis: int | None = None, **overrides) -> tuple[GridSpec, SolverConfig]:
    """Grid and solver settings of the published 2D (256^2) and 3D (128^3) runs.

    ``tau = 2 dx`` and ``tau' = dx / 2`` follow the grid, so a smaller
    ``n_axis`` rescales them.
    """
    if name == "paper-2d":
        grid = GridSpec(2, n_axis or 256)
        base = dict(r_tol=1e-4, p=5)
    elif name == "paper-3d":
        grid = GridSpec(3, n_axis or 128)
        base = dict(r_tol=5e-4, p=3)
    else:
        raise ValueError(f"unknown preset {name!r}")
    base.update(
        tau=2 * grid.dx,
        tau_prime=0.5 * grid.dx,
        lam=10.0,
        beta0=1.0,
        gamma=0.5,
        beta_min=0.05,
        M=5,
        auction=AuctionParams(1000, 1e-7, 4.0, 0.1),
    )
    base.update(overrides)
    return grid, SolverConfig(**base)


@dataclass(frozen=True)
class IterationRecord:
    k: int
    e_tilde: float
    e_hat: float
    beta: float
    changed_cells: int
    adm_runs: int
    region_count: int


@dataclass
class SolveResult:
    region: IndicatorField
    partition: Partition
    trace: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = "max_iterations"
    snapshots: dict[int, Partition] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.trace[-1].k if self.trace else 0

    def energies(self) -> list[float]:
        return [r.e_tilde for r in self.trace]


def _adm(support, cfg: SolverConfig, targets, seed):
    return auction_dynamics(support, cfg.c, cfg.tau, cfg.auction, seed=seed, targets=targets)


def _run_candidates(support, cfg, targets, seeds):
    threads = min(len(seeds), fft_workers())
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda s: _adm(support, cfg, targets, s), seeds))
    return [_adm(support, cfg, targets, s) for s in seeds]


def best_of_p(support: IndicatorField, cfg: SolverConfig, base_seed: int, p: int | None = None) -> Partition:
    """Run auction dynamics with seeds ``base_seed+1 .. base_seed+p`` and keep the lowest region energy.

    Ties go to the lower seed.
    """
    p = cfg.p if p is None else p
    if p < 1:
        raise ValueError("p must be >= 1")
    targets = volume_targets(cfg.c, support.count)
    seeds = [base_seed + q for q in range(1, p + 1)]
    candidates = _run_candidates(support, cfg, targets, seeds)
    if p == 1:
        return candidates[0]
    energies = [energy_tilde(support, part, cfg.tau) for part in candidates]
    return candidates[int(np.argmin(energies))]


def beta_controller(trace: Sequence[float], M: int, r_tol: float, beta: float, gamma: float, k: int) -> float:
    """Shrink ``beta`` by ``gamma`` once the ``M``-step averaged energy stalls.

    Compares the averages ending at 1-based trace positions ``k`` and
    ``k + 1``; only active for ``k > M``.
    """
    if k <= M:
        return beta
    e_k = averaged_energy(trace, M, k)
    e_next = averaged_energy(trace, M, k + 1)
    if e_next == 0:
        return beta
    if abs(e_next - e_k) / abs(e_next) < r_tol:
        return gamma * beta
    return beta


def _iteration_seed(cfg: SolverConfig, k: int, p: int) -> int:
    # disjoint seed blocks per iteration
    return (cfg.seed << 24) + k * (p + 1)


def _record(k, region, part, cfg, beta, changed, runs) -> IterationRecord:
    return IterationRecord(
        k=k,
        e_tilde=energy_tilde(region, part, cfg.tau),
        e_hat=energy_hat(part, cfg.tau),
        beta=beta,
        changed_cells=changed,
        adm_runs=runs,
        region_count=region.count,
    )


def _check_state(region, part, targets, volume):
    assert region.count == volume, f"region volume drifted: {region.count} != {volume}"
    part.validate(targets, region)


def _alternate(u0: IndicatorField, cfg: SolverConfig, regularized: bool, snapshot_every=None) -> SolveResult:
    p = 1 if regularized else cfg.p
    targets = volume_targets(cfg.c, u0.count)
    volume = u0.count
    region = u0
    part = best_of_p(region, cfg, _iteration_seed(cfg, 0, p), p)
    _check_state(region, part, targets, volume)
    beta = cfg.beta0
    trace = [_record(0, region, part, cfg, beta, 0, p)]
    energies = [trace[0].e_tilde]
    result = SolveResult(region, part, trace)
    _snap(result, 0, part, snapshot_every)

    k = 0
    while True:
        if beta <= cfg.beta_min:
            result.stop_reason = "beta_exhausted"
            break
        if k >= cfg.max_iter:
            result.stop_reason = "max_iterations"
            break
        if regularized:
            phi = dominant_function_2(region, part, cfg.tau, cfg.lam, cfg.tau_prime)
        else:
            phi = dominant_function_1(region, part, cfg.tau)
        process = threshold_volume(phi, volume)
        new_region, sets = partial_update(region, process, phi, beta)
        new_part = best_of_p(new_region, cfg, _iteration_seed(cfg, k + 1, p), p)
        _check_state(new_region, new_part, targets, volume)
        rec = _record(k + 1, new_region, new_part, cfg, beta, 2 * sets.k_cells, p)
        trace.append(rec)
        energies.append(rec.e_tilde)
        log.debug("k=%d beta=%.4g E~=%.6f moved=%d", k + 1, beta, rec.e_tilde, sets.k_cells)
        converged = equal(new_region, region)
        region, part = new_region, new_part
        result.region, result.partition = region, part
        _snap(result, k + 1, part, snapshot_every)
        if k > cfg.M:
            # averages over E^{k-M+1..k} and E^{k-M+2..k+1}, i.e. 1-based positions ending at k+1
            new_beta = beta_controller(energies, cfg.M, cfg.r_tol, beta, cfg.gamma, k + 1)
            assert new_beta <= beta
            beta = new_beta
        k += 1
        if converged:
            result.stop_reason = "region_fixed_point"
            break
    return result


def _snap(result: SolveResult, k: int, part: Partition, every) -> None:
    if every and k % every == 0:
        result.snapshots[k] = part


def method_one(u0: IndicatorField, cfg: SolverConfig, snapshot_every: int | None = None) -> SolveResult:
    """Best-of-``p`` auctions per iteration with the plain dominant function."""
    return _alternate(u0, cfg, regularized=False, snapshot_every=snapshot_every)


def method_two(u0: IndicatorField, cfg: SolverConfig, snapshot_every: int | None = None) -> SolveResult:
    """Single auction per iteration with the proximally regularised dominant function."""
    return _alternate(u0, cfg, regularized=True, snapshot_every=snapshot_every)


def method_monotone(
    u0: IndicatorField,
    cfg: SolverConfig,
    initial: Partition | None = None,
    snapshot_every: int | None = None,
) -> SolveResult:
    """Region iterations that never accept a drop of the region energy.

    From the accepted state the step length restarts at 1 and is multiplied
    by ``gamma_mono`` after every rejected trial.  Once it falls below
    ``beta_floor`` the current partition is challenged by ``p_check`` fresh
    auction runs: a better partition replaces it (stepping back one accepted
    state if that breaks monotonicity), otherwise the region is accepted as
    final.  The trace holds the accepted chain only.
    """
    targets = volume_targets(cfg.c, u0.count)
    volume = u0.count
    seed_counter = [cfg.seed << 24]

    def fresh_seed_block(count):
        base = seed_counter[0]
        seed_counter[0] += count + 1
        return base

    part0 = initial if initial is not None else best_of_p(u0, cfg, fresh_seed_block(cfg.p))
    _check_state(u0, part0, targets, volume)
    # accepted chain of (region, partition, energy)
    chain = [(u0, part0, energy_tilde(u0, part0, cfg.tau))]
    trace = [_record(0, u0, part0, cfg, 1.0, 0, 0 if initial is not None else cfg.p)]
    result = SolveResult(u0, part0, trace)
    _snap(result, 0, part0, snapshot_every)
    beta = 1.0
    runs = 0
    attempts = 0
    max_attempts = cfg.max_iter * 20
    while True:
        region, part, energy = chain[-1]
        if len(chain) - 1 >= cfg.max_iter or attempts >= max_attempts:
            result.stop_reason = "max_iterations"
            break
        if beta >= cfg.beta_floor:
            attempts += 1
            phi = dominant_function_1(region, part, cfg.tau)
            trial, sets = partial_update(region, threshold_volume(phi, volume), phi, beta)
            if sets.k_cells == 0:
                beta *= cfg.gamma_mono
                continue
            trial_part = best_of_p(trial, cfg, fresh_seed_block(cfg.p))
            runs += cfg.p
            trial_energy = energy_tilde(trial, trial_part, cfg.tau)
            if trial_energy >= energy:
                _check_state(trial, trial_part, targets, volume)
                chain.append((trial, trial_part, trial_energy))
                trace.append(_record(len(chain) - 1, trial, trial_part, cfg, beta, 2 * sets.k_cells, runs))
                _snap(result, len(chain) - 1, trial_part, snapshot_every)
                runs = 0
                beta = 1.0
            else:
                beta *= cfg.gamma_mono
            continue

        # step length collapsed: challenge the current partition
        base = fresh_seed_block(cfg.p_check)
        seeds = [base + q for q in range(1, cfg.p_check + 1)]
        candidates = _run_candidates(region, cfg, targets, seeds)
        runs += cfg.p_check
        energies = [energy_tilde(region, cand, cfg.tau) for cand in candidates]
        best = int(np.argmin(energies))
        if energies[best] >= energy:
            result.stop_reason = "monotone_accept"
            break
        chain[-1] = (region, candidates[best], energies[best])
        trace[-1] = replace(
            _record(trace[-1].k, region, candidates[best], cfg, trace[-1].beta, trace[-1].changed_cells, 0),
            adm_runs=trace[-1].adm_runs + runs,
        )
        runs = 0
        if len(chain) > 1 and energies[best] < chain[-2][2]:
            chain.pop()
            trace.pop()
        beta = 1.0

    region, part, _ = chain[-1]
    result.region, result.partition = region, part
    return result


def solve(u0: IndicatorField, cfg: SolverConfig, snapshot_every: int | None = None) -> SolveResult:
    if cfg.method == "one":
        return method_one(u0, cfg, snapshot_every)
    if cfg.method == "two":
        return method_two(u0, cfg, snapshot_every)
    return method_monotone(u0, cfg, snapshot_every=snapshot_every)
