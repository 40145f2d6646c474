"""Energy minimization for submodular Laplacian systems.

The system L_F(x) ∋ b is solved by minimizing the convex energy
J(x) = ½ Σ_e f_e(x)² − ⟨b, x⟩, where f_e is the Lovász extension of edge e.
On the cone where every edge keeps its canonical vertex order J is exactly
the quadratic ½‖Wx‖² − ⟨b, x⟩ with W the matrix of canonical subgradients,
so the solver alternates pattern Newton steps (solve M d = −g on that cone)
with safeguarded gradient steps, and stops on a duality certificate: at an
optimum x* with φ = f(x*), min_S [Σ_e φ(e) F_e(S) − b(S)] ≥ 0 and
J(x*) = −½‖φ‖².
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import kernel, max_weight_ideal
from .sfm import sfm
from .submodular import SubmodularTransformation

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_ITERATION_LIMIT = "iteration-limit"

_STEP_FLOOR = 1e-14


@dataclass(frozen=True)
class Problem:
    """A transformation together with a demand vector b."""

    transformation: SubmodularTransformation
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.transformation.n,):
            raise ValueError(
                f"demand vector has shape {b.shape}, expected ({self.transformation.n},)"
            )
        if not np.all(np.isfinite(b)):
            raise ValueError("demand vector must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)


@dataclass
class SolverConfig:
    """Descent parameters; tolerance is the duality-gap threshold relative to 1+|J|."""

    tolerance: float = 1e-8
    max_iterations: int | None = None
    armijo: float = 1e-4
    backtrack: float = 0.5
    certificate_cadence: int = 50

    def __post_init__(self):
        if not (self.tolerance > 0.0):
            raise ValueError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not (0.0 < self.armijo < 1.0) or not (0.0 < self.backtrack < 1.0):
            raise ValueError("line search parameters must lie in (0, 1)")
        if self.certificate_cadence < 1:
            raise ValueError("certificate_cadence must be at least 1")

    def resolve_max_iterations(self, n: int, m: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return max(200, min(50 * n * m, 10**6))


@dataclass
class Solution:
    """Solver output: potentials, edge energies, objective, and certificate."""

    x: np.ndarray
    phi: np.ndarray
    objective: float
    gap: float
    status: str
    iterations: int = 0
    dual_feasible: bool = False
    violating_set: frozenset[int] | None = None
    metadata: dict = field(default_factory=dict)


def apply(transformation: SubmodularTransformation, x) -> np.ndarray:
    """The canonical member Σ_e f_e(x)·w_e of L_F(x).

    For an undirected graph this is the usual Laplacian matrix product with
    conductances weight².
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (transformation.n,):
        raise ValueError(f"expected a vector of length {transformation.n}")
    y = np.zeros(transformation.n)
    for e in transformation.edges:
        w = e.subgradient(x, transformation.n)
        y += float(w @ x) * w
    return y


def energy(transformation: SubmodularTransformation, x) -> float:
    """Σ_e f_e(x)², which equals ⟨x, apply(F, x)⟩; invariant under x ↦ x+α1."""
    x = np.asarray(x, dtype=float)
    return float(sum(e.lovasz(x) ** 2 for e in transformation.edges))


def _edge_state(tr: SubmodularTransformation, x: np.ndarray):
    """Edge energies φ and the canonical subgradient matrix W (one row per edge)."""
    m = len(tr.edges)
    W = np.zeros((m, tr.n))
    phi = np.zeros(m)
    for i, e in enumerate(tr.edges):
        W[i] = e.subgradient(x, tr.n)
        phi[i] = e.lovasz(x)
    return phi, W


def _objective(tr: SubmodularTransformation, b: np.ndarray, x: np.ndarray) -> float:
    return 0.5 * sum(e.lovasz(x) ** 2 for e in tr.edges) - float(b @ x)


def connected_components(transformation: SubmodularTransformation) -> list[np.ndarray]:
    """Vertex components of the union of edge supports, sorted by least vertex.

    Each edge ties its whole support together; vertices touched by no edge
    are singleton components.
    """
    n = transformation.n
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in transformation.edges:
        sup = list(e.support)
        r = find(sup[0])
        for v in sup[1:]:
            rv = find(v)
            if rv != r:
                parent[rv] = r
    groups = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    comps = sorted(groups.values(), key=lambda g: g[0])
    return [np.array(g, dtype=int) for g in comps]


def center_components(x: np.ndarray, components) -> np.ndarray:
    """Shift each component to mean zero; J is invariant under these shifts."""
    out = np.asarray(x, dtype=float).copy()
    for comp in components:
        out[comp] -= out[comp].mean()
    return out


def check_feasible(problem: Problem) -> tuple[bool, frozenset[int] | None]:
    """Test max_{S ∈ ker F} b(S) ≤ 0 on the kernel lattice.

    Returns (True, None) when the maximum is at most 1e-12·(1+‖b‖₁), else
    (False, S) with a maximizing kernel set S.
    """
    lat = kernel(problem.transformation)
    value, ideal = max_weight_ideal(lat, problem.b)
    tol = 1e-12 * (1.0 + float(np.abs(problem.b).sum()))
    if value <= tol:
        return True, None
    return False, frozenset(ideal.vertices)


def certify(problem: Problem, x, tolerance: float | None = None):
    """Duality certificate at x: (gap, dual_feasible, violating_set).

    With φ(e) = f_e(x), the point is dual feasible when
    min_S [Σ_e φ(e) F_e(S) − b(S)] ≥ −tolerance (checked by submodular
    minimization), and then gap = J(x) + ½‖φ‖² ≥ 0 bounds the distance to
    optimality.  When infeasible the minimizing S is returned.
    """
    tr, b = problem.transformation, problem.b
    x = np.asarray(x, dtype=float)
    phi = np.array([e.lovasz(x) for e in tr.edges])
    j_val = 0.5 * float(phi @ phi) - float(b @ x)
    gap = j_val + 0.5 * float(phi @ phi)
    if tolerance is None:
        tolerance = 1e-6 * (1.0 + float(np.abs(b).sum()))
    res = sfm(tr, weights=np.maximum(phi, 0.0), modular=-b)
    if res.value >= -tolerance:
        return gap, True, None
    return gap, False, frozenset(res.minimizer)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def selection_residual(
    transformation: SubmodularTransformation,
    b: np.ndarray,
    x: np.ndarray,
    free: np.ndarray | None = None,
    iterations: int = 300,
) -> tuple[float, np.ndarray]:
    """Min-norm inclusion residual min ‖Σ_e f_e(x)·u_e − b‖₂ over u_e ∈ ∂f_e(x).

    Each subdifferential is the convex hull of the extreme points active at
    x, so the residual is a least-squares over a product of simplices,
    solved by projected gradient.  Edges with f_e(x) = 0 contribute nothing
    (½f² is differentiable there with zero gradient).  With a free mask only
    those coordinates of the residual count.  Returns (norm, full residual
    vector, zero on non-free coordinates).
    """
    tr = transformation
    n = tr.n
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if free is None:
        free = np.ones(n, dtype=bool)
    base = -b[free].astype(float)
    blocks = []
    for e in tr.edges:
        fe = e.lovasz(x)
        if fe <= 1e-12 * (1.0 + abs(fe)):
            continue
        pts = e.active_extreme_points(x, n)
        if len(pts) == 1:
            base = base + fe * pts[0][free]
        else:
            blocks.append(fe * np.stack([p[free] for p in pts], axis=1))

    def embed(r_free):
        full = np.zeros(n)
        full[free] = r_free
        return full

    if not blocks:
        return float(np.linalg.norm(base)), embed(base)
    A = np.concatenate(blocks, axis=1)
    sizes = [blk.shape[1] for blk in blocks]
    lam = np.concatenate([np.full(k, 1.0 / k) for k in sizes])
    sv = np.linalg.svd(A, compute_uv=False)
    lip = float(sv[0]) ** 2 if len(sv) else 1.0
    step = 1.0 / (lip + 1e-30)
    offsets = np.cumsum([0] + sizes)
    prev = math.inf
    for _ in range(iterations):
        r = A @ lam + base
        val = float(r @ r)
        if prev - val <= 1e-18 * (1.0 + val):
            break
        prev = val
        grad = A.T @ r
        lam = lam - step * grad
        for i in range(len(sizes)):
            seg = slice(offsets[i], offsets[i + 1])
            lam[seg] = _project_simplex(lam[seg])
    r = A @ lam + base
    return float(np.linalg.norm(r)), embed(r)


def _tie_groups(x, free, tol):
    """Chains of free coordinates whose consecutive sorted gaps are <= tol.

    Only groups of two or more are returned; they index the kink faces of the
    piecewise quadratic that pass within ``tol`` of ``x``.
    """
    idx = np.flatnonzero(free)
    if idx.size < 2:
        return []
    order = idx[np.argsort(x[idx], kind="stable")]
    groups = []
    current = [int(order[0])]
    for v in order[1:]:
        if x[v] - x[current[-1]] <= tol:
            current.append(int(v))
        else:
            if len(current) > 1:
                groups.append(current)
            current = [int(v)]
    if len(current) > 1:
        groups.append(current)
    return groups


def _face_descend(tr, b, x0, free, groups, cfg, rounds=60):
    """Minimize J on the face where each group of coordinates stays tied.

    ``x0`` is first projected onto the face (each group snapped to its mean),
    then pattern Newton runs in the reduced coordinates, one per group plus
    one per remaining free vertex, with a gradient fallback and a monotone
    line search.  Restricted to the face the tie is no longer a kink, so the
    descent can slide along it instead of bouncing off.  Returns (x, J(x)).
    """
    n = tr.n
    grouped = np.zeros(n, dtype=bool)
    cols = []
    for g in groups:
        col = np.zeros(n)
        col[g] = 1.0
        cols.append(col)
        grouped[g] = True
    for v in np.flatnonzero(free & ~grouped):
        col = np.zeros(n)
        col[v] = 1.0
        cols.append(col)
    E = np.stack(cols, axis=1)
    x = np.asarray(x0, dtype=float).copy()
    for g in groups:
        x[g] = x[g].mean()
    j_cur = _objective(tr, b, x)
    gtol = 1e-13 * (1.0 + float(np.linalg.norm(b)))
    for _ in range(rounds):
        phi, W = _edge_state(tr, x)
        gy = E.T @ (W.T @ phi - b)
        gnorm = float(np.linalg.norm(gy))
        if gnorm <= gtol:
            break
        we = W @ E
        d = np.linalg.lstsq(we.T @ we, -gy, rcond=None)[0]
        dd = float(gy @ d)
        if dd >= -1e-18 * (1.0 + abs(j_cur)):
            d = -gy
            dd = -gnorm * gnorm
        step = E @ d
        t = 1.0
        took = False
        while t >= _STEP_FLOOR:
            xt = x + t * step
            jt = _objective(tr, b, xt)
            if jt <= j_cur + t * cfg.armijo * dd:
                x, j_cur = xt, jt
                took = True
                break
            t *= cfg.backtrack
        if not took:
            break
    return x, j_cur


def _descend(tr, b, x0, free, cfg, converged=None):
    """Shared descent core over the free coordinates; fixed ones stay put.

    Tries a pattern Newton step (exact on the current canonical cone), falls
    back to a Barzilai-Borwein gradient step, and when neither makes material
    progress descends along the min-norm subgradient, which is downhill
    whenever the point is not stationary.  When even that stalls, the iterate
    is hovering next to a kink face below the subdifferential model's tie
    resolution: near-tied coordinates are snapped together at escalating
    tolerances and the objective is minimized on the snapped face, which
    turns bouncing off the kink into sliding along it.  ``converged`` is an
    optional callback run every certificate_cadence accepted steps and at
    quiescence.

    Returns (x, accepted steps, info dict).
    """
    n = tr.n
    x = np.asarray(x0, dtype=float).copy()
    max_iter = cfg.resolve_max_iterations(n, max(len(tr.edges), 1))
    j_cur = _objective(tr, b, x)
    counts = {"newton": 0, "gradient": 0, "subgradient": 0, "face": 0}
    trace = [j_cur]
    grad_scale = 1e-12 * (1.0 + float(np.linalg.norm(b)))
    prev_gf = None
    prev_xf = None
    t_grad = None
    stall = 0
    creep = 0
    reason = "iteration-limit"
    it = 0

    def line_search(d_free, dd, t_start):
        t = t_start
        ref = cfg.armijo * dd
        while t >= _STEP_FLOOR:
            xt = x.copy()
            xt[free] = x[free] + t * d_free
            jt = _objective(tr, b, xt)
            if jt <= j_cur + t * ref:
                return t, xt, jt
            t *= cfg.backtrack
        return None, None, None

    while it < max_iter:
        it += 1
        phi, W = _edge_state(tr, x)
        g = W.T @ phi - b
        gf = g[free]
        gnorm = float(np.linalg.norm(gf))
        if gnorm <= grad_scale:
            reason = "stationary"
            break

        accepted = None
        material = 1e-14 * (1.0 + abs(j_cur))
        strong = 1e-5 * (1.0 + abs(j_cur))
        window = trace[-21] - trace[-1] if len(trace) > 20 else math.inf
        # zigzag against a kink face defeats the cone steps: progress decays
        # while each step still clears the material bar.  Three consecutive
        # near-zero steps, a near-dead 20-step window, or a periodic probe
        # during any slow stretch hand control to the crossing routes.
        force_cross = (
            creep >= 3
            or window <= 1e-5 * (1.0 + abs(j_cur))
            or (window <= 1e-3 * (1.0 + abs(j_cur)) and it % 50 == 0)
        )
        wf = W[:, free]
        if not force_cross:
            gram = wf.T @ wf
            d_newton = np.linalg.lstsq(gram, -gf, rcond=None)[0]
            dd = float(gf @ d_newton)
            if dd < -1e-16 * (1.0 + abs(j_cur)):
                t, xt, jt = line_search(d_newton, dd, 1.0)
                if t is not None and j_cur - jt > material:
                    accepted = ("newton", t, xt, jt)

        if accepted is None and not force_cross:
            if t_grad is None:
                lip = float(np.sum(wf * wf)) + 1e-30
                t0 = 1.0 / lip
            else:
                t0 = t_grad
            t, xt, jt = line_search(-gf, -gnorm**2, t0)
            if t is not None and j_cur - jt > material:
                accepted = ("gradient", t, xt, jt)

        if accepted is None:
            rnorm, rvec = selection_residual(tr, b, x, free)
            if rnorm <= grad_scale:
                reason = "stationary"
                break
            t, xt, jt = line_search(-rvec[free], -rnorm**2, 1.0)
            if t is not None and j_cur - jt > material:
                accepted = ("subgradient", t, xt, jt)

        if accepted is None or (force_cross and j_cur - accepted[3] <= strong):
            # a weak crossing step usually means the kink itself is below the
            # tie resolution; snapping near-ties together and descending on
            # the snapped face turns bouncing off the kink into sliding along
            # it, and the best candidate wins
            best = accepted
            scale_x = 1.0 + float(np.max(np.abs(x)))
            seen = set()
            for tau in (1e-8, 1e-6, 1e-4):
                groups = _tie_groups(x, free, tau * scale_x)
                key = tuple(tuple(gr) for gr in groups)
                if not groups or key in seen:
                    continue
                seen.add(key)
                xt, jt = _face_descend(tr, b, x, free, groups, cfg)
                if j_cur - jt > material and (best is None or jt < best[3]):
                    best = ("face", 1.0, xt, jt)
            accepted = best

        if accepted is None:
            reason = "no-descent"
            break

        kind, t, xt, jt = accepted
        counts[kind] += 1
        new_gf = None
        if kind == "gradient":
            new_phi, new_w = _edge_state(tr, xt)
            new_gf = (new_w.T @ new_phi - b)[free]
            dx = xt[free] - x[free]
            dg = new_gf - gf
            dxdg = float(dx @ dg)
            if dxdg > 0:
                t_grad = min(max(dxdg / float(dg @ dg), 1e-12), 1e12)
            else:
                t_grad = None
        rel_drop = (j_cur - jt) / (1.0 + abs(j_cur))
        x, j_cur = xt, jt
        trace.append(j_cur)
        stall = stall + 1 if rel_drop <= 1e-14 else 0
        # cone steps that barely move are zigzag creep against a kink; after
        # three of them the crossing routes are forced
        if kind in ("subgradient", "face") or rel_drop > 1e-10:
            creep = 0
        else:
            creep += 1
        if converged is not None and (it % cfg.certificate_cadence == 0 or stall >= 3):
            if converged(x):
                reason = "certified"
                break
        if stall >= 5:
            reason = "stalled"
            break

    info = {"counts": counts, "trace": trace, "reason": reason}
    return x, it, info


def solve_system(problem: Problem, config: SolverConfig | None = None, x0=None) -> Solution:
    """Minimize J and certify; infeasible systems are detected up front.

    Feasibility needs b(S) ≤ 0 on every kernel set and, because any member
    of L_F(x) sums to zero, b(V) = 0; a strictly negative total demand is
    reported as infeasible with the whole ground set attached.  The solution
    is centered to mean zero on every connected component (hence ⟨x,1⟩ = 0)
    before the final certificate.
    """
    cfg = config if config is not None else SolverConfig()
    tr, b = problem.transformation, problem.b
    n = tr.n
    m = len(tr.edges)
    feasible, witness = check_feasible(problem)
    total = float(b.sum())
    if not feasible or total < -1e-12 * (1.0 + float(np.abs(b).sum())):
        if feasible:
            witness = frozenset(range(n))
        return Solution(
            x=np.zeros(n),
            phi=np.zeros(m),
            objective=0.0,
            gap=math.inf,
            status=STATUS_INFEASIBLE,
            violating_set=witness,
        )

    dual_tol = 1e-6 * (1.0 + float(np.abs(b).sum()))

    def certified(xc):
        gap, ok, _ = certify(problem, xc, tolerance=dual_tol)
        j_val = _objective(tr, b, xc)
        return ok and gap <= cfg.tolerance * (1.0 + abs(j_val))

    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    free = np.ones(n, dtype=bool)
    x, iters, info = _descend(tr, b, start, free, cfg, converged=certified)
    comps = connected_components(tr)
    x = center_components(x, comps)

    phi = np.array([e.lovasz(x) for e in tr.edges])
    j_val = 0.5 * float(phi @ phi) - float(b @ x)
    gap, dual_ok, violating = certify(problem, x, tolerance=dual_tol)
    status = (
        STATUS_OPTIMAL
        if dual_ok and gap <= cfg.tolerance * (1.0 + abs(j_val))
        else STATUS_ITERATION_LIMIT
    )
    return Solution(
        x=x,
        phi=np.maximum(phi, 0.0),
        objective=j_val,
        gap=gap,
        status=status,
        iterations=iters,
        dual_feasible=dual_ok,
        violating_set=violating,
        metadata={
            "descent": info["reason"],
            "steps": dict(info["counts"]),
            "objective_trace": tuple(info["trace"]),
        },
    )
