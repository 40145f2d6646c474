"""Label propagation: solve the system with some potentials pinned.

Given fixed values x̃ on a labeled set T and demands b̃ on the rest, the
solver minimizes ½ Σ_e f_e(x)² − Σ_{v∈U} b̃(v)x(v) over the free
coordinates.  On an undirected graph with b̃ = 0 this is the harmonic
extension of the labels; cuts of other kinds give directed and
higher-order variants with the same interface.

The objective can be unbounded when an energy-free direction that vanishes
on T has positive demand.  Every such direction is a conic combination of
1_L for a kernel member L avoiding T and 1_L − 1 for a kernel member
containing T, so unboundedness is decided by two maximum-weight-ideal
queries before any descent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .laplacian import (
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    Problem,
    SolverConfig,
    Solution,
    _descend,
    _edge_state,
    _objective,
    connected_components,
    selection_residual,
    solve_system,
)
from .lattice import kernel, max_weight_ideal
from .submodular import SubmodularTransformation


@dataclass(frozen=True, eq=False)
class LabeledProblem:
    """A transformation with disjoint label and boundary assignments
    covering the ground set: ``fixed`` maps labeled vertices to their pinned
    potentials, ``boundary`` maps the rest to demand values (often zero)."""

    transformation: SubmodularTransformation
    fixed: dict[int, float]
    boundary: dict[int, float]

    def __post_init__(self):
        n = self.transformation.n
        object.__setattr__(self, "fixed", {int(v): float(x) for v, x in self.fixed.items()})
        object.__setattr__(self, "boundary", {int(v): float(x) for v, x in self.boundary.items()})
        overlap = self.fixed.keys() & self.boundary.keys()
        if overlap:
            raise ValueError(f"vertices {sorted(overlap)} are both fixed and boundary")
        covered = self.fixed.keys() | self.boundary.keys()
        if covered != set(range(n)):
            missing = sorted(set(range(n)) - covered)
            extra = sorted(covered - set(range(n)))
            if missing:
                raise ValueError(f"vertices {missing} have neither a label nor a demand")
            raise ValueError(f"vertex indices {extra} out of range for n={n}")
        for v, val in list(self.fixed.items()) + list(self.boundary.items()):
            if not math.isfinite(val):
                raise ValueError(f"value for vertex {v} must be finite")

    @property
    def labeled(self) -> tuple[int, ...]:
        return tuple(sorted(self.fixed))

    @property
    def unlabeled(self) -> tuple[int, ...]:
        return tuple(sorted(self.boundary))

    def demand_vector(self) -> np.ndarray:
        b = np.zeros(self.transformation.n)
        for v, val in self.boundary.items():
            b[v] = val
        return b


def _unbounded_direction(tr, fixed_vertices, b_full, tol):
    """A kernel member witnessing an unbounded objective, or None.

    Checks max b̃(L) over members avoiding T and max b̃(L ∩ U) − b̃(U) over
    members containing T; either positive gives an energy-free descent ray.
    """
    lat = kernel(tr)
    t_set = tuple(fixed_vertices)
    val1, ideal1 = max_weight_ideal(lat, b_full, must_exclude=t_set)
    if ideal1 is not None and val1 > tol:
        return ideal1.vertices
    total = float(b_full.sum())
    val2, ideal2 = max_weight_ideal(lat, b_full, must_include=t_set)
    if ideal2 is not None and val2 > total + tol:
        return ideal2.vertices
    return None


def solve_labeled(problem: LabeledProblem, config: SolverConfig | None = None) -> Solution:
    """Minimize the labeled objective over the unlabeled coordinates.

    The returned ``gap`` is the min-norm first-order residual on the free
    coordinates (the labeled analogue of a duality gap), and the metadata
    reports the boundary values Σ_e f_e(x)·w_e(v) induced on the labeled
    vertices by the canonical subgradient selection; at ties other
    selections can induce other boundaries.
    """
    cfg = config if config is not None else SolverConfig()
    tr = problem.transformation
    n = tr.n
    labeled = problem.labeled
    b_full = problem.demand_vector()
    if not labeled:
        return solve_system(Problem(tr, b_full), cfg)

    scale = 1.0 + float(np.abs(b_full).sum())
    witness = _unbounded_direction(tr, labeled, b_full, 1e-12 * scale)
    if witness is not None:
        return Solution(
            x=np.zeros(n),
            phi=np.zeros(len(tr.edges)),
            objective=0.0,
            gap=math.inf,
            status=STATUS_INFEASIBLE,
            violating_set=frozenset(witness),
            metadata={"reason": "objective unbounded along an energy-free direction"},
        )

    free = np.ones(n, dtype=bool)
    x0 = np.zeros(n)
    for v, val in problem.fixed.items():
        free[v] = False
        x0[v] = val

    res_tol = cfg.tolerance * (1.0 + float(np.linalg.norm(b_full)))

    def certified(x):
        rnorm, _ = selection_residual(tr, b_full, x, free)
        return rnorm <= res_tol

    x, it, info = _descend(tr, b_full, x0, free, cfg, converged=certified)

    for comp in connected_components(tr):
        if not any(v in problem.fixed for v in comp.tolist()):
            x[comp] -= x[comp].mean()

    phi, w_mat = _edge_state(tr, x)
    induced = w_mat.T @ phi
    rnorm, _ = selection_residual(tr, b_full, x, free)
    status = STATUS_OPTIMAL if rnorm <= res_tol else STATUS_ITERATION_LIMIT
    return Solution(
        x=x,
        phi=phi,
        objective=_objective(tr, b_full, x),
        gap=rnorm,
        status=status,
        iterations=it,
        metadata={
            "descent": info["reason"],
            "steps": info["counts"],
            "induced_boundary": {v: float(induced[v]) for v in labeled},
            "boundary_note": "canonical subgradient selection; not unique at ties",
        },
    )


def predict_labels(x, unlabeled, threshold: float = 0.0) -> np.ndarray:
    """Sign labels for the unlabeled vertices, ties resolved to +1.

    Returns an int array aligned with sorted(unlabeled).
    """
    x = np.asarray(x, dtype=float)
    order = sorted(int(v) for v in unlabeled)
    for v in order:
        if not (0 <= v < len(x)):
            raise ValueError(f"vertex index {v} out of range for n={len(x)}")
    return np.array([1 if x[v] >= threshold else -1 for v in order], dtype=int)
