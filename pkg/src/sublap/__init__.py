"""Solvers and analysis tools for submodular Laplacian systems.

A system L_F(x) ∋ b asks for potentials x whose canonical boundary
Σ_e f_e(x)·∂f_e matches a demand b, where each f_e is the Lovász
extension of a submodular edge function: graph cuts give the familiar
Laplacian, directed cuts give diodes, hypergraph cuts and explicit tables
give higher-order couplings.  The package solves such systems with
certificates, repairs infeasible demands, propagates labels, and computes
effective resistances and current-flow centralities on top.
"""

from .analysis import (
    CentralityReport,
    ResistanceValue,
    betweenness_centrality,
    betweenness_report,
    closeness_centrality,
    closeness_report,
    effective_resistance,
    resistance_matrix,
    triangle_check,
)
from .flow import ParametricCapacity, parametric_min_cut, quadratic_flow_dual
from .laplacian import (
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    Problem,
    Solution,
    SolverConfig,
    apply,
    center_components,
    certify,
    check_feasible,
    connected_components,
    energy,
    selection_residual,
    solve_system,
)
from .lattice import (
    IDEAL_LIMIT,
    DistributiveLattice,
    IdealLimitError,
    LowerIdeal,
    enumerate_ideals,
    greedy_lmo,
    is_member,
    kernel,
    max_weight_ideal,
)
from .maxflow import FlowAssignment, FlowNetwork, UnboundedCutError, max_flow_min_cut
from .regression import (
    RegressionResult,
    brute_force_regress,
    regress_combinatorial,
    regress_frank_wolfe,
)
from .semisup import LabeledProblem, predict_labels, solve_labeled
from .sfm import SfmResult, sfm
from .submodular import (
    DirectedCut,
    GroundSet,
    HypergraphCut,
    InvalidEdgeError,
    SubmodularTransformation,
    TableFunction,
    UndirectedCut,
    base_extreme_points,
    evaluate,
    lovasz_eval,
    lovasz_subgradient,
)

__version__ = "0.1.0"

__all__ = [
    "CentralityReport",
    "DirectedCut",
    "DistributiveLattice",
    "FlowAssignment",
    "FlowNetwork",
    "GroundSet",
    "HypergraphCut",
    "IDEAL_LIMIT",
    "IdealLimitError",
    "InvalidEdgeError",
    "LabeledProblem",
    "LowerIdeal",
    "ParametricCapacity",
    "Problem",
    "RegressionResult",
    "ResistanceValue",
    "SfmResult",
    "Solution",
    "SolverConfig",
    "STATUS_INFEASIBLE",
    "STATUS_ITERATION_LIMIT",
    "STATUS_OPTIMAL",
    "SubmodularTransformation",
    "TableFunction",
    "UnboundedCutError",
    "UndirectedCut",
    "apply",
    "base_extreme_points",
    "betweenness_centrality",
    "betweenness_report",
    "brute_force_regress",
    "center_components",
    "certify",
    "check_feasible",
    "closeness_centrality",
    "closeness_report",
    "connected_components",
    "effective_resistance",
    "energy",
    "enumerate_ideals",
    "evaluate",
    "greedy_lmo",
    "is_member",
    "kernel",
    "lovasz_eval",
    "lovasz_subgradient",
    "max_flow_min_cut",
    "max_weight_ideal",
    "parametric_min_cut",
    "predict_labels",
    "quadratic_flow_dual",
    "regress_combinatorial",
    "regress_frank_wolfe",
    "resistance_matrix",
    "selection_residual",
    "sfm",
    "solve_labeled",
    "solve_system",
    "triangle_check",
]
