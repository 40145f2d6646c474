"""Submodular function minimization for weighted transformations plus a modular part.

Minimizes G(S) = sum_e weights[e] * F_e(S) + sum_{v in S} modular[v] over all
S with forced_in <= S <= V - forced_out.  Two backends:

* ``cut``: exact, via a single max-flow when every edge is a graph or
  hypergraph cut.  Hyperedges use the two-auxiliary-node gadget (infinite
  arcs into the first node and out of the second, one weighted arc between).
* ``wolfe``: the minimum-norm-point algorithm on the base polytope of the
  restricted function, for transformations containing table edges.

Both return the inclusion-minimal and inclusion-maximal minimizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maxflow import FlowNetwork, max_flow_min_cut, maximal_cut_side
from .submodular import SubmodularTransformation

_WOLFE_TOL = 1e-10
_WOLFE_MAX_MAJOR = 10000


@dataclass
class SfmResult:
    """Outcome of one minimization.

    ``minimizer`` is the inclusion-minimal optimal set, ``maximal_minimizer``
    the inclusion-maximal one; both include any forced-in vertices.
    ``base_point`` carries the minimum-norm point over the free vertices when
    the Wolfe backend ran (None for the cut backend).
    """

    value: float
    minimizer: frozenset[int]
    maximal_minimizer: frozenset[int]
    method: str
    base_point: np.ndarray | None = None


class _Objective:
    """Incremental evaluator for the restricted objective.

    Works relative to the forced-in baseline: marginals of adding free
    vertices one at a time, with per-edge support bitmasks so each edge is
    touched only through its incident vertices.
    """

    def __init__(self, tr, weights, modular, forced_in, free):
        self.free = list(free)
        self.modular = modular
        self.coeffs = []
        self.base_masks = []
        self.edge_fns = []
        # incidence[v] lists (local edge id, bit of v in that edge's support)
        self.incidence = {v: [] for v in self.free}
        free_set = set(self.free)
        for e, w in zip(tr.edges, weights):
            c = w * e.weight
            if c == 0.0:
                continue
            if not any(v in free_set for v in e.support):
                continue
            eid = len(self.coeffs)
            self.coeffs.append(c)
            self.edge_fns.append(e)
            mask = 0
            for i, v in enumerate(e.support):
                if v in forced_in:
                    mask |= 1 << i
                elif v in free_set:
                    self.incidence[v].append((eid, 1 << i))
            self.base_masks.append(mask)

    def marginals(self, order):
        """Marginal gains of adding ``order`` one vertex at a time to forced_in."""
        masks = list(self.base_masks)
        vals = [self.coeffs[i] * self.edge_fns[i]._raw(masks[i]) for i in range(len(masks))]
        out = np.empty(len(order))
        for j, v in enumerate(order):
            gain = self.modular[v]
            for eid, bit in self.incidence[v]:
                masks[eid] |= bit
                new = self.coeffs[eid] * self.edge_fns[eid]._raw(masks[eid])
                gain += new - vals[eid]
                vals[eid] = new
            out[j] = gain
        return out


def _evaluate(tr, weights, modular, subset):
    s = frozenset(subset)
    total = sum(float(modular[v]) for v in s)
    for e, w in zip(tr.edges, weights):
        if w != 0.0:
            total += w * e.value(s)
    return total


def _cut_backend(tr, weights, modular, forced_in, forced_out):
    n = tr.n
    s, t = n, n + 1
    arcs = []
    aux = n + 2
    for e, w in zip(tr.edges, weights):
        c = w * e.weight
        if c == 0.0:
            continue
        if e.kind == "undirected":
            arcs.append((e.u, e.v, c))
            arcs.append((e.v, e.u, c))
        elif e.kind == "directed":
            arcs.append((e.tail, e.head, c))
        elif e.kind == "hyper":
            a, b = aux, aux + 1
            aux += 2
            for v in e.vertices:
                arcs.append((v, a, math.inf))
                arcs.append((b, v, math.inf))
            arcs.append((a, b, c))
        else:
            raise ValueError(f"cut backend cannot handle edge kind {e.kind!r}")
    for v in range(n):
        m = float(modular[v])
        if m > 0.0:
            arcs.append((v, t, m))
        elif m < 0.0:
            arcs.append((s, v, -m))
    for v in forced_in:
        arcs.append((s, v, math.inf))
    for v in forced_out:
        arcs.append((v, t, math.inf))

    net = FlowNetwork(aux, s, t, tuple(arcs))
    _, side, assign = max_flow_min_cut(net)
    minimal = frozenset(v for v in side if v < n)
    maximal = frozenset(v for v in maximal_cut_side(assign) if v < n)
    value = _evaluate(tr, weights, modular, minimal)
    return SfmResult(value, minimal, maximal, "cut")


def _affine_minimizer(Q):
    """Minimum-norm point of the affine hull of the columns of Q.

    Returns (alpha, point) with sum(alpha) = 1.
    """
    m = Q.shape[1]
    gram = Q.T @ Q
    scale = np.trace(gram) / m if m else 1.0
    if scale <= 0.0:
        scale = 1.0
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = gram
    A[:m, m] = scale
    A[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    alpha = sol[:m]
    total = alpha.sum()
    if abs(total) > 1e-14:
        alpha = alpha / total
    return alpha, Q @ alpha


def _wolfe_backend(tr, weights, modular, forced_in, forced_out, tol):
    free = sorted(set(range(tr.n)) - set(forced_in) - set(forced_out))
    obj = _Objective(tr, weights, modular, forced_in, free)
    base_value = _evaluate(tr, weights, modular, forced_in)
    k = len(free)
    idx = {v: i for i, v in enumerate(free)}

    def greedy(x):
        """Minimizing linear oracle over the base polytope of the restriction."""
        order = sorted(free, key=lambda v: (x[idx[v]], v))
        marg = obj.marginals(order)
        q = np.empty(k)
        for j, v in enumerate(order):
            q[idx[v]] = marg[j]
        return q

    w = greedy(np.zeros(k))
    atoms = [w.copy()]
    lam = np.array([1.0])
    seen = {tuple(np.round(w, 12))}
    scale = 1.0 + float(w @ w)

    for _ in range(_WOLFE_MAX_MAJOR):
        q = greedy(w)
        ww = float(w @ w)
        scale = max(scale, 1.0 + abs(ww))
        if ww - float(w @ q) <= tol * scale:
            break
        key = tuple(np.round(q, 12))
        if key in seen:
            break
        seen.add(key)
        atoms.append(q)
        lam = np.append(lam, 0.0)
        # minor cycles: pull w to the affine minimizer, dropping atoms that
        # would need negative coefficients
        while True:
            Q = np.column_stack(atoms)
            alpha, y = _affine_minimizer(Q)
            if alpha.min() > 1e-12:
                lam = alpha
                w = y
                break
            shrink = np.inf
            for l_i, a_i in zip(lam, alpha):
                if a_i < l_i:
                    shrink = min(shrink, l_i / (l_i - a_i))
            shrink = max(min(shrink, 1.0), 0.0)
            lam = (1.0 - shrink) * lam + shrink * alpha
            keep = lam > 1e-12
            if keep.sum() == 0:
                keep[int(np.argmax(lam))] = True
            atoms = [a for a, k_ in zip(atoms, keep) if k_]
            lam = lam[keep]
            lam = lam / lam.sum()
            if len(atoms) == 1:
                w = atoms[0].copy()
                lam = np.array([1.0])
                break

    # read the minimizers off the sorted order with exact re-evaluation:
    # prefixes of the ascending order bracket the minimal and maximal optima
    order = sorted(free, key=lambda v: (w[idx[v]], v))
    marg = obj.marginals(order)
    prefix_vals = np.concatenate([[0.0], np.cumsum(marg)])
    best = float(prefix_vals.min())
    atol = 1e-9 * (1.0 + abs(best))
    hits = [j for j, v in enumerate(prefix_vals) if v <= best + atol]
    lo, hi = hits[0], hits[-1]
    minimal = frozenset(forced_in) | frozenset(order[:lo])
    maximal = frozenset(forced_in) | frozenset(order[:hi])
    return SfmResult(base_value + best, minimal, maximal, "wolfe", w)


def sfm(
    transformation: SubmodularTransformation,
    weights=None,
    modular=None,
    forced_in=(),
    forced_out=(),
    method: str = "auto",
    tol: float = _WOLFE_TOL,
) -> SfmResult:
    """Minimize a nonnegatively weighted transformation plus a modular term.

    ``weights`` defaults to all ones, ``modular`` to all zeros.  ``forced_in``
    and ``forced_out`` restrict the feasible sets to forced_in <= S <= V
    minus forced_out.
    """
    tr = transformation
    n = tr.n
    if weights is None:
        weights = np.ones(len(tr.edges))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(tr.edges),):
        raise ValueError(f"expected {len(tr.edges)} edge weights, got shape {weights.shape}")
    if np.any(weights < 0.0):
        raise ValueError("edge weights must be nonnegative")
    if modular is None:
        modular = np.zeros(n)
    modular = np.asarray(modular, dtype=float)
    if modular.shape != (n,):
        raise ValueError(f"expected a modular vector of length {n}, got shape {modular.shape}")
    forced_in = frozenset(forced_in)
    forced_out = frozenset(forced_out)
    for v in forced_in | forced_out:
        if not (0 <= v < n):
            raise ValueError(f"vertex index {v} out of range for n={n}")
    if forced_in & forced_out:
        raise ValueError("forced_in and forced_out must be disjoint")

    if method == "auto":
        method = "cut" if tr.cut_only() else "wolfe"
    if method == "cut":
        if not tr.cut_only():
            raise ValueError("cut backend requires a transformation of cut edges only")
        return _cut_backend(tr, weights, modular, forced_in, forced_out)
    if method == "wolfe":
        if len(forced_in) + len(forced_out) == n:
            val = _evaluate(tr, weights, modular, forced_in)
            return SfmResult(val, forced_in, forced_in, "wolfe")
        return _wolfe_backend(tr, weights, modular, forced_in, forced_out, tol)
    raise ValueError(f"unknown method {method!r}")
