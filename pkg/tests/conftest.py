"""Shared random generators and brute-force oracles for the test suite.

Everything here is deliberately naive: exhaustive enumeration over
bitmasks, dense pseudo-inverse solves, tiny dense subproblems.  The
package must agree with these on small instances; speed comes from numpy
vectorization over all 2^n subsets, never from being clever.

Subsets are encoded as bitmasks with bit v set when vertex v is inside.
"""

import contextlib
import io
import json

import numpy as np

from sublap import (
    DirectedCut,
    DistributiveLattice,
    GroundSet,
    HypergraphCut,
    SubmodularTransformation,
    TableFunction,
    UndirectedCut,
)
from sublap.cli import run_command

EDGE_KINDS = ("undirected", "directed", "hyper", "table")


# ----------------------------------------------------------------- generators


def random_connected_undirected(rng, n, extra=None):
    """Random spanning tree plus chords, weights in [0.5, 2)."""
    if n < 2:
        return SubmodularTransformation(GroundSet(n), ())
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append(UndirectedCut(u, v, float(rng.uniform(0.5, 2.0))))
    if extra is None:
        extra = int(rng.integers(0, n))
    for _ in range(extra):
        u, v = (int(w) for w in rng.choice(n, size=2, replace=False))
        edges.append(UndirectedCut(u, v, float(rng.uniform(0.5, 2.0))))
    return SubmodularTransformation(GroundSet(n), tuple(edges))


def coverage_table(rng, support, weight=None):
    """Random symmetric nonnegative submodular table on ``support``.

    Starts from a weighted coverage function h(S) = sum of c_j over the
    target sets A_j hit by S, then symmetrizes with the complement so the
    empty set and the full support both map to zero.  Both steps preserve
    submodularity, and symmetry makes the values nonnegative.
    """
    k = len(support)
    full = (1 << k) - 1
    h = np.zeros(1 << k)
    for _ in range(int(rng.integers(1, 4))):
        target = int(rng.integers(1, full + 1))
        c = int(rng.integers(2, 11)) / 8.0  # dyadic, so the symmetrization below is exact
        for mask in range(1 << k):
            if mask & target:
                h[mask] += c
    values = tuple(float(h[m] + h[full ^ m] - h[full]) for m in range(1 << k))
    if weight is None:
        weight = float(rng.uniform(0.5, 1.5))
    return TableFunction(tuple(support), values, weight)


def random_edge(rng, n, kinds=EDGE_KINDS):
    kind = kinds[int(rng.integers(0, len(kinds)))]
    w = float(rng.uniform(0.5, 1.5))
    if kind == "undirected":
        u, v = (int(a) for a in rng.choice(n, size=2, replace=False))
        return UndirectedCut(u, v, w)
    if kind == "directed":
        u, v = (int(a) for a in rng.choice(n, size=2, replace=False))
        return DirectedCut(u, v, w)
    if kind == "hyper":
        size = int(rng.integers(2, min(4, n) + 1))
        verts = tuple(int(a) for a in rng.choice(n, size=size, replace=False))
        return HypergraphCut(verts, w)
    size = int(rng.integers(2, min(3, n) + 1))
    support = tuple(int(a) for a in rng.choice(n, size=size, replace=False))
    return coverage_table(rng, support, w)


def random_transformation(rng, n, m, kinds=EDGE_KINDS):
    return SubmodularTransformation(
        GroundSet(n), tuple(random_edge(rng, n, kinds) for _ in range(m))
    )


def zero_sum_vector(rng, n):
    v = rng.normal(0.0, 1.0, n)
    return v - v.mean()


def dyadic_vector(rng, n, span=8):
    """Entries k/8 with integer k: all subset sums are exact in binary."""
    return rng.integers(-span, span + 1, n) / 8.0


def random_lattice(rng, n, max_classes=6):
    """Random partition into classes plus a random order on the classes."""
    k = int(rng.integers(1, min(max_classes, n) + 1))
    verts = list(rng.permutation(n))
    cuts = sorted(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    classes = []
    start = 0
    for cut in list(cuts) + [n]:
        classes.append(tuple(int(v) for v in verts[start:cut]))
        start = cut
    arcs = []
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < 0.35:
                arcs.append((i, j))
    return DistributiveLattice(n, tuple(classes), tuple(arcs))


# -------------------------------------------------------------------- oracles


def edge_values_bitmask(edge, n):
    """edge.value over all 2^n subsets at once."""
    masks = np.arange(1 << n, dtype=np.int64)
    if edge.kind == "undirected":
        a = (masks >> edge.u) & 1
        c = (masks >> edge.v) & 1
        return edge.weight * np.abs(a - c).astype(float)
    if edge.kind == "directed":
        a = (masks >> edge.tail) & 1
        c = (masks >> edge.head) & 1
        return edge.weight * (a * (1 - c)).astype(float)
    if edge.kind == "hyper":
        inside = np.zeros(1 << n, dtype=np.int64)
        for v in edge.vertices:
            inside += (masks >> v) & 1
        split = (inside > 0) & (inside < len(edge.vertices))
        return edge.weight * split.astype(float)
    idx = np.zeros(1 << n, dtype=np.int64)
    for i, v in enumerate(edge.support):
        idx |= ((masks >> v) & 1) << i
    return edge.weight * np.asarray(edge.values, dtype=float)[idx]


def transformation_values_bitmask(tr):
    total = np.zeros(1 << tr.n)
    for e in tr.edges:
        total += edge_values_bitmask(e, tr.n)
    return total


def kernel_masks(tr):
    """Bitmasks of every S with F_e(S) = 0 for all edges (F >= 0, so the
    sum over edges vanishing is equivalent)."""
    total = transformation_values_bitmask(tr)
    tol = 1e-12 * (1.0 + float(total.max(initial=0.0)))
    return np.flatnonzero(total <= tol)


def subset_sums(b):
    """b(S) for every bitmask, by doubling."""
    acc = np.zeros(1)
    for v in range(len(b)):
        acc = np.concatenate([acc, acc + b[v]])
    return acc


def mask_of(subset):
    out = 0
    for v in subset:
        out |= 1 << v
    return out


def set_of(mask, n):
    return frozenset(v for v in range(n) if (mask >> v) & 1)


def laplacian_matrix(tr):
    """Dense Laplacian with conductances weight**2 (undirected edges only)."""
    L = np.zeros((tr.n, tr.n))
    for e in tr.edges:
        w2 = e.weight**2
        L[e.u, e.u] += w2
        L[e.v, e.v] += w2
        L[e.u, e.v] -= w2
        L[e.v, e.u] -= w2
    return L


def pinv_solve(tr, b):
    return np.linalg.pinv(laplacian_matrix(tr)) @ np.asarray(b, dtype=float)


def gauge_align(x, ref):
    """Shift x by a constant so the means agree (single component)."""
    return x - np.mean(x) + np.mean(ref)


def harmonic_solve(tr, fixed, boundary):
    """Dense oracle for pinned undirected problems.

    Minimizes the quadratic form with x pinned on the labeled set T and
    demand b on the free set U: L_UU x_U = b_U - L_UT x_T.
    """
    L = laplacian_matrix(tr)
    T = sorted(fixed)
    U = sorted(boundary)
    x = np.zeros(tr.n)
    for t in T:
        x[t] = fixed[t]
    if U:
        rhs = np.array([boundary[u] for u in U], dtype=float)
        if T:
            rhs = rhs - L[np.ix_(U, T)] @ np.array([fixed[t] for t in T])
        x[U] = np.linalg.solve(L[np.ix_(U, U)], rhs)
    return x


def enumerated_constraint_matrix(lattice):
    """(A, sets): one indicator row per nonempty member of the lattice."""
    from sublap import enumerate_ideals

    rows = []
    sets = []
    for ideal in enumerate_ideals(lattice):
        if ideal.vertices:
            row = np.zeros(lattice.n)
            row[sorted(ideal.vertices)] = 1.0
            rows.append(row)
            sets.append(frozenset(ideal.vertices))
    if not rows:
        return np.zeros((0, lattice.n)), []
    return np.stack(rows), sets


# ---------------------------------------------------------------------- CLI


def run_cli(argv):
    """Exit code, stdout text, stderr text for one in-process invocation."""
    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run_command(list(argv))
    return code, out.getvalue(), err.getvalue()


def write_problem(path, n, edges, b=None, labels=None, labels_names=None):
    """Write a problem document; edges are plain dicts."""
    doc = {"n": n, "edges": edges}
    if b is not None:
        doc["b"] = list(b)
    if labels is not None:
        doc["labels"] = labels
    if labels_names is not None:
        doc["labels_names"] = labels_names
    path = str(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle)
    return path
