"""Parametric min-cut and the quadratic flow dual.

The parametric network has one node per ground-set vertex with source
capacity max(b(u) − α, 0) and sink capacity max(α − b(u), 0); order
constraints are infinite interior arcs.  The source side of the minimal
min cut then minimizes Σ_{u∈S} (α − b(u)) over down-closed S, and the
minimal minimizers are nested as α grows, so all breakpoints are found by
divide and conquer on α.

The quadratic flow dual decomposes the demand b over extreme points of the
edge base polytopes: minimize ½ Σ_e (Σ_w φ(e,w))² subject to
Σ_{e,w} φ(e,w)·w = b and φ ≥ 0, solved by away-step Frank-Wolfe on a
compact slice of that polyhedron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, nnls

from .laplacian import Problem, SolverConfig, solve_system
from .maxflow import FlowAssignment, FlowNetwork, max_flow_min_cut
from .submodular import SubmodularTransformation


@dataclass(frozen=True)
class ParametricCapacity:
    """GGT-monotone capacities: per node u, source arc max(b(u)−α, 0) and
    sink arc max(α−b(u), 0); ``order_arcs`` are infinite arcs (u, v) forcing
    v into the source side whenever u is (u in S implies v in S)."""

    demands: tuple[float, ...]
    order_arcs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(float(d) for d in self.demands))
        object.__setattr__(self, "order_arcs", tuple((int(u), int(v)) for u, v in self.order_arcs))
        n = len(self.demands)
        if not all(math.isfinite(d) for d in self.demands):
            raise ValueError("demands must be finite")
        for u, v in self.order_arcs:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ValueError(f"invalid order arc ({u}, {v})")

    @property
    def num_nodes(self) -> int:
        return len(self.demands)

    def network_at(self, alpha: float, forced_in=(), forced_out=()) -> FlowNetwork:
        """The s-t network at a fixed α, with optional side forcing."""
        n = self.num_nodes
        s, t = n, n + 1
        arcs = [(u, v, math.inf) for u, v in self.order_arcs]
        for u in range(n):
            cap_src = max(self.demands[u] - alpha, 0.0)
            cap_snk = max(alpha - self.demands[u], 0.0)
            if cap_src > 0.0:
                arcs.append((s, u, cap_src))
            if cap_snk > 0.0:
                arcs.append((u, t, cap_snk))
        for u in forced_in:
            arcs.append((s, int(u), math.inf))
        for u in forced_out:
            arcs.append((int(u), t, math.inf))
        return FlowNetwork(n + 2, s, t, tuple(arcs))


def _reduced_value(pc: ParametricCapacity, subset, alpha: float) -> float:
    """Σ_{u∈S} (α − b(u)), the cut value with the α-only common term removed."""
    return sum(alpha - pc.demands[u] for u in subset)


def _solve_at(pc: ParametricCapacity, alpha: float, forced_in=(), forced_out=()) -> frozenset[int]:
    net = pc.network_at(alpha, forced_in, forced_out)
    _, side, _ = max_flow_min_cut(net)
    return frozenset(u for u in side if u < pc.num_nodes)


def parametric_min_cut(
    pc: ParametricCapacity, alpha_lo: float, alpha_hi: float
) -> tuple[list[float], list[frozenset[int]]]:
    """All α in [alpha_lo, alpha_hi] where the minimal min-cut side changes.

    Returns (breakpoints, chain) with chain one longer than breakpoints:
    chain[j] is the minimal minimizer A^α for α between breakpoints j and
    j+1, taking the right-hand set at a breakpoint itself (minimal
    minimizers shrink as α grows, so A^α is right-continuous).

    Divide and conquer: if the endpoint minimizers differ, their two linear
    value functions α|S| − b(S) cross at a single α*; the cut there either
    confirms a breakpoint or splits the interval with a strictly better set,
    and vertices settled by the nesting property are forced to their sides.
    """
    if alpha_lo > alpha_hi:
        raise ValueError("alpha_lo must not exceed alpha_hi")
    s_lo = _solve_at(pc, alpha_lo)
    s_hi = _solve_at(pc, alpha_hi)
    all_nodes = frozenset(range(pc.num_nodes))
    found: list[tuple[float, frozenset[int]]] = []

    def recurse(set_lo: frozenset[int], set_hi: frozenset[int]):
        if set_lo == set_hi:
            return
        alpha_star = (
            sum(pc.demands[u] for u in set_lo) - sum(pc.demands[u] for u in set_hi)
        ) / (len(set_lo) - len(set_hi))
        s_star = _solve_at(
            pc, alpha_star, forced_in=set_hi, forced_out=all_nodes - set_lo
        )
        line = _reduced_value(pc, set_lo, alpha_star)
        value = _reduced_value(pc, s_star, alpha_star)
        tol = 1e-9 * (1.0 + abs(line))
        if s_star == set_hi or s_star == set_lo or value >= line - tol:
            found.append((alpha_star, set_hi))
            return
        recurse(set_lo, s_star)
        recurse(s_star, set_hi)

    recurse(s_lo, s_hi)
    breakpoints = [bp for bp, _ in found]
    chain = [s_lo] + [right for _, right in found]
    return breakpoints, chain


def _expanded_flow_start(tr, columns, b):
    """Initial feasible φ via max flow when every column is a two-terminal arc.

    Each nonzero extreme point of a cut edge is weight·(e_u − e_v); routing
    φ units along u→v realizes its boundary contribution, so a feasible φ is
    a flow in the network with per-point arcs of infinite capacity and
    terminal arcs carrying b⁺ and b⁻.  Returns None when the demand cannot
    be routed.
    """
    n = len(b)
    s, t = n, n + 1
    arcs = []
    col_arc = []
    for col in columns:
        u = int(np.argmax(col))
        v = int(np.argmin(col))
        col_arc.append(len(arcs))
        arcs.append((u, v, math.inf))
    supply = 0.0
    for v in range(n):
        if b[v] > 0.0:
            arcs.append((s, v, float(b[v])))
            supply += float(b[v])
        elif b[v] < 0.0:
            arcs.append((v, t, float(-b[v])))
    net = FlowNetwork(n + 2, s, t, tuple(arcs))
    value, _, assign = max_flow_min_cut(net)
    if value < supply - 1e-9 * (1.0 + supply):
        return None
    phi0 = np.zeros(len(columns))
    for k, col in enumerate(columns):
        scale = float(col[np.argmax(col)])
        phi0[k] = assign.arc_flows[col_arc[k]] / scale
    return phi0


def _linprog_start(a_mat, b):
    res = linprog(
        c=np.ones(a_mat.shape[1]),
        A_eq=a_mat,
        b_eq=b,
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        return None
    return np.maximum(res.x, 0.0)


def _decode_from_potentials(a_mat, edge_of_col, num_edges, b, target):
    """φ ≥ 0 matching both the boundary and prescribed per-edge masses.

    At the optimum the mass on edge e equals f_e(x*), so once certified
    potentials are in hand the optimal flow is any nonnegative solution of
    the stacked linear system [A; S] φ = [b; target] with S the per-edge
    aggregation matrix.  Nonnegative least squares finds it; the fit is
    accepted only when essentially exact, which is what certifies the
    decoded flow.  Returns φ or None.
    """
    num_cols = a_mat.shape[1]
    sel = np.zeros((num_edges, num_cols))
    sel[edge_of_col, np.arange(num_cols)] = 1.0
    stacked = np.vstack([a_mat, sel])
    rhs = np.concatenate([b, target])
    try:
        phi, rnorm = nnls(stacked, rhs)
    except RuntimeError:
        return None
    if rnorm > 1e-7 * (1.0 + float(np.linalg.norm(rhs))):
        return None
    return phi


def quadratic_flow_dual(
    transformation: SubmodularTransformation,
    b,
    config: SolverConfig | None = None,
) -> tuple[FlowAssignment, np.ndarray]:
    """Minimize ½ Σ_e (Σ_w φ(e,w))² over {φ ≥ 0, Σ φ(e,w)·w = b}.

    Away-step Frank-Wolfe on the compact slice 1ᵀφ ≤ τ around an initial
    feasible point (found by max flow for cut-only transformations, by
    linear programming otherwise); the slice bound doubles, a few times at
    most, if the optimum presses against it.  Potentials x are recovered by
    a warm-started solve_system, and the consistency |f_e(x) − Σ_w φ(e,w)|
    is recorded in the assignment metadata.

    Returns (FlowAssignment, x).  ``edge_vars[(e, k)]`` is the variable on
    extreme point k of edge e (indices into base_extreme_points; points
    never used carry no key).  Raises ValueError when the boundary demand
    admits no feasible flow.
    """
    cfg = config if config is not None else SolverConfig()
    tr = transformation
    n = tr.n
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise ValueError(f"expected a demand vector of length {n}")
    if abs(float(b.sum())) > 1e-9 * (1.0 + float(np.abs(b).sum())):
        raise ValueError(
            "boundary demand is infeasible: every base extreme point sums "
            "to zero, so the demand must as well"
        )

    columns = []
    col_key = []
    edge_of_col = []
    for ei, e in enumerate(tr.edges):
        for k, w in enumerate(e.extreme_points(n)):
            if not np.any(w):
                continue
            columns.append(w)
            col_key.append((ei, k))
            edge_of_col.append(ei)
    m = len(tr.edges)
    num_cols = len(columns)
    edge_of_col = np.array(edge_of_col, dtype=int) if num_cols else np.zeros(0, dtype=int)

    if num_cols == 0:
        if np.any(np.abs(b) > 1e-12 * (1.0 + np.abs(b).sum())):
            raise ValueError("boundary demand is infeasible: no feasible flow")
        assign = FlowAssignment(
            FlowNetwork(2, 0, 1, ()), (), {}, {"objective": 0.0, "fw_gap": 0.0, "iterations": 0}
        )
        return assign, np.zeros(n)

    a_mat = np.stack(columns, axis=1)

    cut_only = tr.cut_only()
    phi0 = None
    if cut_only:
        phi0 = _expanded_flow_start(tr, columns, b)
    if phi0 is None:
        phi0 = _linprog_start(a_mat, b)
        if phi0 is None:
            raise ValueError("boundary demand is infeasible: no feasible flow")

    def edge_mass(phi):
        mass = np.zeros(m)
        np.add.at(mass, edge_of_col, phi)
        return mass

    def objective(phi):
        mass = edge_mass(phi)
        return 0.5 * float(mass @ mass)

    tau = float(phi0.sum() + np.abs(b).sum()) + 1.0
    max_iters = min(cfg.resolve_max_iterations(n, max(m, 1)), 5000)
    gap_tol = cfg.tolerance

    atoms = {}

    def atom_key(vec):
        return tuple(np.round(vec, 12))

    def lmo(grad):
        res = linprog(
            c=grad,
            A_eq=a_mat,
            b_eq=b,
            A_ub=np.ones((1, num_cols)),
            b_ub=[tau],
            bounds=(0, None),
            method="highs",
        )
        if not res.success:
            return None
        return np.maximum(res.x, 0.0)

    phi = phi0.copy()
    atoms[atom_key(phi0)] = (phi0.copy(), 1.0)
    iterations = 0
    fw_gap = math.inf
    doublings = 0
    while iterations < max_iters:
        iterations += 1
        mass = edge_mass(phi)
        f_val = 0.5 * float(mass @ mass)
        grad = mass[edge_of_col]
        s_vec = lmo(grad)
        if s_vec is None:
            raise RuntimeError("linear minimization subproblem failed")
        fw_gap = float(grad @ (phi - s_vec))
        if fw_gap <= gap_tol * (1.0 + abs(f_val)):
            if float(s_vec.sum()) >= tau - 1e-9 * (1.0 + tau) and doublings < 6:
                tau *= 2.0
                doublings += 1
                continue
            break
        away_key = max(atoms, key=lambda k: float(grad @ atoms[k][0]))
        away_vec, away_wt = atoms[away_key]
        fw_dir = s_vec - phi
        away_dir = phi - away_vec
        use_away = float(grad @ (-away_dir)) < float(grad @ fw_dir) and len(atoms) > 1
        if use_away:
            d = away_dir
            gamma_max = away_wt / (1.0 - away_wt) if away_wt < 1.0 else math.inf
        else:
            d = fw_dir
            gamma_max = 1.0
        dmass = edge_mass(d)
        quad = float(dmass @ dmass)
        slope = float(grad @ d)
        if slope >= -1e-18 * (1.0 + abs(f_val)):
            break
        gamma = gamma_max if quad <= 0.0 else min(-slope / quad, gamma_max)
        if not math.isfinite(gamma):
            break
        phi = phi + gamma * d
        if use_away:
            new_atoms = {}
            for k2, (vec, wt) in atoms.items():
                w2 = wt * (1.0 + gamma)
                if k2 == away_key:
                    w2 -= gamma
                if w2 > 1e-14:
                    new_atoms[k2] = (vec, w2)
            atoms = new_atoms
        else:
            key = atom_key(s_vec)
            new_atoms = {}
            for k2, (vec, wt) in atoms.items():
                w2 = wt * (1.0 - gamma)
                if w2 > 1e-14:
                    new_atoms[k2] = (vec, w2)
            base = new_atoms.get(key, (s_vec, 0.0))
            new_atoms[key] = (base[0], base[1] + gamma)
            atoms = new_atoms

    phi = np.maximum(phi, 0.0)
    mass = edge_mass(phi)
    f_val = 0.5 * float(mass @ mass)

    x = _recover_potentials(tr, b, phi, mass, columns, edge_of_col, cfg)
    if fw_gap > gap_tol * (1.0 + abs(f_val)):
        # Frank-Wolfe can crawl near the end; the certified potentials pin
        # the optimal per-edge masses, so decode the flow from them instead.
        target = np.array([max(e.lovasz(x), 0.0) for e in tr.edges])
        decoded = _decode_from_potentials(a_mat, edge_of_col, m, b, target)
        if decoded is not None:
            decoded_mass = edge_mass(decoded)
            value = 0.5 * float(decoded_mass @ decoded_mass)
            if value <= f_val + 1e-9 * (1.0 + abs(f_val)):
                phi = decoded
                mass = decoded_mass
                f_val = value
                if float(phi.sum()) > tau:
                    tau = 2.0 * float(phi.sum())
                s_vec = lmo(mass[edge_of_col])
                if s_vec is not None:
                    fw_gap = float(mass[edge_of_col] @ (phi - s_vec))
    residual = float(np.max(np.abs(a_mat @ phi - b))) if num_cols else 0.0
    cons = np.array([abs(e.lovasz(x) - mass[i]) for i, e in enumerate(tr.edges)])
    max_cons = float(cons.max()) if m else 0.0

    edge_vars = {col_key[i]: float(phi[i]) for i in range(num_cols) if phi[i] > 0.0}
    meta = {
        "objective": f_val,
        "fw_gap": fw_gap,
        "iterations": iterations,
        "tau": tau,
        "boundary_residual": residual,
        "max_consistency_error": max_cons,
        "converged": fw_gap <= gap_tol * (1.0 + abs(f_val)),
    }
    if cut_only:
        assign = _cut_assignment(tr, columns, col_key, phi, b, edge_vars, meta)
    else:
        assign = FlowAssignment(FlowNetwork(2, 0, 1, ()), (), edge_vars, meta)
    return assign, x


def _cut_assignment(tr, columns, col_key, phi, b, edge_vars, meta):
    """Materialize the expanded network with per-point arc flows."""
    n = tr.n
    s, t = n, n + 1
    arcs = []
    flows = []
    for k, col in enumerate(columns):
        u = int(np.argmax(col))
        v = int(np.argmin(col))
        scale = float(col[u])
        arcs.append((u, v, math.inf))
        flows.append(float(phi[k]) * scale)
    for v in range(n):
        if b[v] > 0.0:
            arcs.append((s, v, float(b[v])))
            flows.append(float(b[v]))
        elif b[v] < 0.0:
            arcs.append((v, t, float(-b[v])))
            flows.append(float(-b[v]))
    net = FlowNetwork(n + 2, s, t, tuple(arcs))
    return FlowAssignment(net, tuple(flows), edge_vars, meta)


def _recover_potentials(tr, b, phi, mass, columns, edge_of_col, cfg):
    """Warm start for x: fit ⟨ŵ_e, x⟩ = m_e with ŵ_e the φ-averaged direction,
    then polish and certify through solve_system."""
    n = tr.n
    rows = []
    rhs = []
    for ei in range(len(tr.edges)):
        if mass[ei] <= 0.0:
            continue
        direction = np.zeros(n)
        for k in np.nonzero(edge_of_col == ei)[0]:
            direction += phi[k] * columns[k]
        rows.append(direction / mass[ei])
        rhs.append(mass[ei])
    rows.append(np.ones(n))
    rhs.append(0.0)
    x0 = np.linalg.lstsq(np.stack(rows), np.array(rhs), rcond=None)[0]
    sol = solve_system(Problem(tr, b), cfg, x0=x0)
    return sol.x
