"""Synthetic vascular trees by constrained constructive optimization."""

from .domain import BallDomain, BoxDomain, MaskDomain, PerfusionDomain
from .errors import (
    CcoError,
    ConfigError,
    DegenerateDomainError,
    DegenerateGeometryError,
    DegenerateSolutionError,
    GrowthStalled,
    InputError,
    SolverError,
    TreeFileError,
    UsageError,
)
from .growth import CandidateEvaluation, Grower, evaluate_connection, grow
from .kamiya import (
    BifurcationSolution,
    LocalBifurcationProblem,
    brute_force_bifurcation,
    local_cost,
    optimal_bifurcation,
    solve_radii,
)
from .params import CcoParams
from .spatial import SpatialIndex
from .tree import TreeReport, VesselTree, init_tree, validate

__all__ = [
    "BallDomain", "BifurcationSolution", "BoxDomain", "CandidateEvaluation",
    "CcoError", "CcoParams", "ConfigError", "DegenerateDomainError",
    "DegenerateGeometryError", "DegenerateSolutionError", "Grower", "GrowthStalled",
    "InputError", "LocalBifurcationProblem", "MaskDomain", "PerfusionDomain",
    "SolverError", "SpatialIndex", "TreeFileError", "TreeReport", "UsageError",
    "VesselTree", "brute_force_bifurcation", "evaluate_connection", "grow",
    "init_tree", "local_cost", "optimal_bifurcation", "solve_radii", "validate",
]
