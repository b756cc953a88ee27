"""Simulation and verification lab for a dyadic cutting-stack tower map,
its labeled-particle suspension and the associated entropy estimates."""

__version__ = "0.1.0"

from .construction import LabelLaw, ReturnTimeMap, Tower, TowerBuild
from .dbar import BlockDistribution, DbarResult, dbar_empirical, dbar_exact
from .dyadic import DyadicPoint, odometer_apply, odometer_inverse, stage_of
from .entropy import (EntropyReport, block_entropy, entropy_gap_bound,
                      induced_coding_entropy, poisson_entropy)
from .errors import BudgetError, InsufficientSampleError
from .particles import (FreeCounts, LabeledSiteCounts, LemmaParams,
                        conditional_white_law, lecam_gap)
from .rng import generator, seed_split
from .schedule import StageSchedule, default_schedule
from .suspension import (CountWindow, reconstruct, sample_xi0, sample_xi_n,
                         sample_xi_infinity, window_replicates)
from .transport import TransportResult, min_cost_transport

__all__ = [
    "__version__",
    "BlockDistribution", "BudgetError", "CountWindow", "DbarResult",
    "DyadicPoint", "EntropyReport", "FreeCounts", "InsufficientSampleError",
    "LabelLaw", "LabeledSiteCounts", "LemmaParams", "ReturnTimeMap",
    "StageSchedule", "Tower", "TowerBuild", "TransportResult",
    "block_entropy", "conditional_white_law", "dbar_empirical", "dbar_exact",
    "default_schedule", "entropy_gap_bound", "generator",
    "induced_coding_entropy", "lecam_gap", "min_cost_transport",
    "odometer_apply", "odometer_inverse", "poisson_entropy", "reconstruct",
    "sample_xi0", "sample_xi_infinity", "sample_xi_n", "seed_split",
    "stage_of", "window_replicates",
]
