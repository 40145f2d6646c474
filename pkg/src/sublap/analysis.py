"""Effective resistance and current-flow centrality.

R(u, v) = ⟨e_u − e_v, x*⟩ where x* solves the system with a unit source at
u and sink at v.  The pair is feasible exactly when every kernel member
containing u contains v, which reduces to one Birkhoff order lookup, so
infinite resistances cost no solve.  At the optimum the identity
R = Σ_e f_e(x*)² ties the resistance to the edge energies and is checked
on every finite evaluation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .laplacian import (
    STATUS_OPTIMAL,
    Problem,
    SolverConfig,
    solve_system,
)
from .lattice import kernel
from .submodular import SubmodularTransformation

_IDENTITY_RTOL = 1e-5


@dataclass(frozen=True)
class ResistanceValue:
    """Resistance with the optimizing potentials and edge energies; the
    degraded flag marks a value from an uncertified solve or one failing
    the energy identity."""

    value: float
    witness_x: np.ndarray | None = None
    witness_phi: np.ndarray | None = None
    degraded: bool = False


@dataclass(frozen=True)
class CentralityReport:
    """Scores sorted by decreasing score, ties by vertex index.  For
    betweenness, ``pair_values`` maps each feasible ordered pair (s, t) to
    the per-vertex throughflow tuple τ_st."""

    measure: str
    scores: tuple[tuple[int, float], ...]
    pair_values: dict[tuple[int, int], tuple[float, ...]] | None = None


def _check_vertex(n: int, v: int, name: str) -> int:
    v = int(v)
    if not (0 <= v < n):
        raise ValueError(f"{name} index {v} out of range for n={n}")
    return v


def _pair_feasible(lattice, u: int, v: int) -> bool:
    """True when b = e_u − e_v is feasible: no kernel member holds u
    without v.  Vertices of forced-out classes belong to no member, so any
    pair sourced there is vacuously feasible."""
    cu = lattice.class_of(u)
    if cu in lattice.forced_out:
        return True
    return lattice.class_of(v) in lattice.below(cu)


def effective_resistance(
    transformation: SubmodularTransformation,
    source: int,
    target: int,
    config: SolverConfig | None = None,
    x0=None,
) -> ResistanceValue:
    """R(source, target), +inf when the unit demand is infeasible."""
    tr = transformation
    n = tr.n
    source = _check_vertex(n, source, "source")
    target = _check_vertex(n, target, "target")
    if source == target:
        raise ValueError("source and target must differ")
    if not _pair_feasible(kernel(tr), source, target):
        return ResistanceValue(math.inf)
    cfg = config if config is not None else SolverConfig()
    b = np.zeros(n)
    b[source] = 1.0
    b[target] = -1.0
    sol = solve_system(Problem(tr, b), cfg, x0=x0)
    value = float(sol.x[source] - sol.x[target])
    energy_total = float(sol.phi @ sol.phi)
    degraded = sol.status != STATUS_OPTIMAL or abs(value - energy_total) > _IDENTITY_RTOL * (
        1.0 + abs(value)
    )
    return ResistanceValue(value, sol.x, sol.phi, degraded)


def _resistance_column(tr, target, cfg):
    """R(u, target) for all u, warm-starting each solve from the last."""
    n = tr.n
    col = np.zeros(n)
    warm = None
    for u in range(n):
        if u == target:
            continue
        rv = effective_resistance(tr, u, target, cfg, x0=warm)
        col[u] = rv.value
        if rv.witness_x is not None:
            warm = rv.witness_x
    return col


def resistance_matrix(
    transformation: SubmodularTransformation,
    config: SolverConfig | None = None,
    threads: int = 1,
) -> np.ndarray:
    """All-pairs matrix M[u, v] = R(u, v), zero diagonal, inf where
    infeasible.  Columns are independent and can be computed in parallel."""
    tr = transformation
    cfg = config if config is not None else SolverConfig()
    n = tr.n
    out = np.zeros((n, n))
    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(lambda v: _resistance_column(tr, v, cfg), range(n)))
        for v in range(n):
            out[:, v] = cols[v]
    else:
        for v in range(n):
            out[:, v] = _resistance_column(tr, v, cfg)
    return out


def triangle_check(
    transformation: SubmodularTransformation,
    u: int,
    v: int,
    w: int,
    config: SolverConfig | None = None,
) -> tuple[float, float, bool]:
    """(R(u,v), R(u,w) + R(w,v), holds) for the resistance triangle
    inequality, within 1e-6 relative slack; an infinite right side holds
    against anything."""
    n = transformation.n
    names = [_check_vertex(n, a, name) for a, name in ((u, "u"), (v, "v"), (w, "w"))]
    u, v, w = names
    if len({u, v, w}) != 3:
        raise ValueError("u, v, w must be three distinct vertices")
    lhs = effective_resistance(transformation, u, v, config).value
    rhs = (
        effective_resistance(transformation, u, w, config).value
        + effective_resistance(transformation, w, v, config).value
    )
    if math.isinf(rhs):
        return lhs, rhs, True
    holds = lhs <= rhs + 1e-6 * (1.0 + rhs)
    return lhs, rhs, holds


def closeness_centrality(
    transformation: SubmodularTransformation,
    v: int,
    config: SolverConfig | None = None,
) -> float:
    """n / Σ_{u≠v} R(u, v); zero when any summand is infinite or n = 1."""
    tr = transformation
    n = tr.n
    v = _check_vertex(n, v, "vertex")
    if n == 1:
        return 0.0
    cfg = config if config is not None else SolverConfig()
    col = _resistance_column(tr, v, cfg)
    total = float(sum(col[u] for u in range(n) if u != v))
    if math.isinf(total) or total <= 0.0:
        return 0.0
    return n / total


def _incident_graph_edges(tr, v):
    out = []
    for e in tr.edges:
        if e.kind == "undirected" and v in (e.u, e.v):
            out.append(e)
        elif e.kind == "directed" and v in (e.tail, e.head):
            out.append(e)
    return out


def _betweenness_all(tr, cfg, threads):
    """Scores for every vertex plus the per-pair throughflow table.

    One solve per feasible ordered pair (s, t); the flow through v is the
    current Σ weight·f_e(x) over graph edges incident to v.  Infeasible
    pairs contribute nothing.
    """
    if not tr.graph_only():
        raise ValueError("betweenness requires a graph transformation (cut edges on pairs)")
    n = tr.n
    scores = np.zeros(n)
    pair_values: dict[tuple[int, int], tuple[float, ...]] = {}
    if n < 3:
        return scores, pair_values
    lat = kernel(tr)
    incident = [_incident_graph_edges(tr, v) for v in range(n)]
    pairs = [
        (s, t)
        for s in range(n)
        for t in range(n)
        if s != t and _pair_feasible(lat, s, t)
    ]

    def tau_for_pair(pair):
        s, t = pair
        b = np.zeros(n)
        b[s] = 1.0
        b[t] = -1.0
        sol = solve_system(Problem(tr, b), cfg)
        tau = np.zeros(n)
        for v in range(n):
            if v in (s, t):
                continue
            tau[v] = sum(e.weight * e.lovasz(sol.x) for e in incident[v])
        return tau

    if threads > 1 and pairs:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            taus = list(pool.map(tau_for_pair, pairs))
    else:
        taus = [tau_for_pair(p) for p in pairs]
    for pair, tau in zip(pairs, taus):
        pair_values[pair] = tuple(float(t) for t in tau)
        scores += tau
    scores /= (n - 1) * (n - 2)
    return scores, pair_values


def betweenness_centrality(
    transformation: SubmodularTransformation,
    v: int,
    config: SolverConfig | None = None,
) -> float:
    """Average throughflow of v over unit s-t demands:
    Σ_{s,t ≠ v, s ≠ t} τ_st(v) / ((n−1)(n−2)), graph transformations only."""
    n = transformation.n
    v = _check_vertex(n, v, "vertex")
    cfg = config if config is not None else SolverConfig()
    scores, _ = _betweenness_all(transformation, cfg, threads=1)
    return float(scores[v])


def _sorted_scores(scores) -> tuple[tuple[int, float], ...]:
    order = sorted(range(len(scores)), key=lambda v: (-scores[v], v))
    return tuple((v, float(scores[v])) for v in order)


def closeness_report(
    transformation: SubmodularTransformation,
    config: SolverConfig | None = None,
    threads: int = 1,
) -> CentralityReport:
    tr = transformation
    cfg = config if config is not None else SolverConfig()
    n = tr.n
    mat = resistance_matrix(tr, cfg, threads)
    scores = np.zeros(n)
    for v in range(n):
        total = float(sum(mat[u, v] for u in range(n) if u != v))
        scores[v] = 0.0 if (n == 1 or math.isinf(total) or total <= 0.0) else n / total
    return CentralityReport("closeness", _sorted_scores(scores))


def betweenness_report(
    transformation: SubmodularTransformation,
    config: SolverConfig | None = None,
    threads: int = 1,
) -> CentralityReport:
    cfg = config if config is not None else SolverConfig()
    scores, pair_values = _betweenness_all(transformation, cfg, threads)
    return CentralityReport("betweenness", _sorted_scores(scores), pair_values)
