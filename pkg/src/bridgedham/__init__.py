"""Hamiltonian cycles with a bounded share of long edges through random points in the unit square.

The pipeline is: choose parameters (:mod:`.params`), sample nodes
(:mod:`.sampling`), tile the square and test the backbone events
(:mod:`.grid`), merge small cycles into one Hamiltonian cycle
(:mod:`.cycle`), and repeat over seeds (:mod:`.experiment`).
"""

from .params import ModelParams, TilingSpec, bridge_budget, radius, rect_width, tile_side
from .sampling import Density, Instance, density_bounds, sample_nodes
from .grid import GridState, build_grid, detect_F, detect_H, detect_I, detect_J, build_backbone
from .cycle import BridgeStats, CycleState, construct_hamiltonian, best_effort_completion, validate
from .experiment import BatchSummary, TrialReport, run_batch, run_trial

__all__ = [
    "ModelParams", "TilingSpec", "bridge_budget", "radius", "rect_width", "tile_side",
    "Density", "Instance", "density_bounds", "sample_nodes",
    "GridState", "build_grid", "detect_F", "detect_H", "detect_I", "detect_J", "build_backbone",
    "BridgeStats", "CycleState", "construct_hamiltonian", "best_effort_completion", "validate",
    "TrialReport", "BatchSummary", "run_trial", "run_batch",
]
