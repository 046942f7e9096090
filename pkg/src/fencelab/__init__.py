"""Longest minimal length partitions by threshold and auction dynamics on periodic grids."""

from .auction import AuctionParams, auction_dynamics, membership_auction, volume_targets
from .energy import energy_hat, energy_report, energy_tilde, isoperimetric_ratio, perimeter_estimate
from .fields import GridSpec, IndicatorField, Partition, ScalarField
from .shapes import named_shape, rasterize
from .solver import SolverConfig, SolveResult, method_monotone, method_one, method_two, paper_preset, solve

__version__ = "0.1.0"

__all__ = [
    "AuctionParams",
    "GridSpec",
    "IndicatorField",
    "Partition",
    "ScalarField",
    "SolverConfig",
    "SolveResult",
    "auction_dynamics",
    "energy_hat",
    "energy_report",
    "energy_tilde",
    "isoperimetric_ratio",
    "membership_auction",
    "method_monotone",
    "method_one",
    "method_two",
    "named_shape",
    "paper_preset",
    "perimeter_estimate",
    "rasterize",
    "solve",
    "volume_targets",
]
