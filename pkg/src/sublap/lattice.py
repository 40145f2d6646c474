"""Distributive lattices as Birkhoff representations.

A lattice of vertex subsets (lower ideals) is stored as a partition of the
ground set into equivalence classes plus a DAG of order arcs: (i, j) means
class i lies below class j, so every member containing j's vertices contains
i's.  The kernel of a transformation, {S : F_e(S) = 0 for all e}, is built
from n restricted minimizations; membership tests, enumeration, modular
optimization over ideals, and the greedy linear-minimization oracle for the
regression region all live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .maxflow import FlowNetwork, max_flow_min_cut
from .sfm import sfm
from .submodular import SubmodularTransformation

# Enumeration is a desk-scale tool; families larger than this raise.
IDEAL_LIMIT = 4096
# Lattices with at most this many classes get a cached explicit enumeration
# used as a fast path by max_weight_ideal and greedy_lmo.
_ENUM_CLASS_CAP = 14


class IdealLimitError(RuntimeError):
    """The lattice has more lower ideals than the requested limit."""


@dataclass(frozen=True)
class LowerIdeal:
    """One member of the lattice: a union of classes, down-closed."""

    vertices: frozenset[int]
    classes: tuple[int, ...]


@dataclass(frozen=True)
class DistributiveLattice:
    """Birkhoff representation: classes of the ground set plus order arcs.

    ``hasse_arcs`` contains pairs (i, j) with class i below class j; any
    transitively redundant arcs are tolerated.  ``forced_in`` classes belong
    to every member, ``forced_out`` classes to none (both empty for kernel
    lattices, where the empty set and the ground set are members).
    """

    n: int
    classes: tuple[frozenset[int], ...]
    hasse_arcs: tuple[tuple[int, int], ...] = ()
    forced_in: frozenset[int] = frozenset()
    forced_out: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(frozenset(c) for c in self.classes))
        object.__setattr__(self, "hasse_arcs", tuple((int(i), int(j)) for i, j in self.hasse_arcs))
        object.__setattr__(self, "forced_in", frozenset(self.forced_in))
        object.__setattr__(self, "forced_out", frozenset(self.forced_out))
        k = len(self.classes)
        seen = set()
        for c in self.classes:
            if not c:
                raise ValueError("classes must be nonempty")
            if c & seen:
                raise ValueError("classes must be disjoint")
            seen |= c
        if seen != set(range(self.n)):
            raise ValueError("classes must partition the ground set")
        for i, j in self.hasse_arcs:
            if not (0 <= i < k and 0 <= j < k) or i == j:
                raise ValueError(f"invalid order arc ({i}, {j})")

        # reflexive-transitive closure of "below": below[j] = {i : i <= j}
        preds = [[] for _ in range(k)]
        for i, j in self.hasse_arcs:
            preds[j].append(i)
        below = [None] * k
        state = [0] * k  # 0 unvisited, 1 on stack, 2 done

        def visit(j):
            if state[j] == 1:
                raise ValueError("order arcs contain a cycle")
            if state[j] == 2:
                return
            state[j] = 1
            acc = {j}
            for i in preds[j]:
                visit(i)
                acc |= below[i]
            state[j] = 2
            below[j] = acc

        for j in range(k):
            visit(j)
        object.__setattr__(self, "_below", tuple(frozenset(b) for b in below))
        above = [set() for _ in range(k)]
        for j in range(k):
            for i in below[j]:
                above[i].add(j)
        object.__setattr__(self, "_above", tuple(frozenset(a) for a in above))

        for j in self.forced_in:
            if not self._below[j] <= self.forced_in:
                raise ValueError("forced_in must be down-closed")
        for j in self.forced_out:
            if not self._above[j] <= self.forced_out:
                raise ValueError("forced_out must be up-closed")
        if self.forced_in & self.forced_out:
            raise ValueError("forced_in and forced_out must be disjoint")

        class_of = np.empty(self.n, dtype=int)
        for idx, c in enumerate(self.classes):
            for v in c:
                class_of[v] = idx
        class_of.setflags(write=False)
        object.__setattr__(self, "_class_of", class_of)
        object.__setattr__(self, "_enum_cache", [])  # 1-slot lazy cache

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_of(self, v: int) -> int:
        if not (0 <= v < self.n):
            raise ValueError(f"vertex index {v} out of range for n={self.n}")
        return int(self._class_of[v])

    def below(self, j: int) -> frozenset[int]:
        """Class indices i with i below-or-equal j."""
        return self._below[j]

    def class_weights(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.n,):
            raise ValueError(f"expected a weight vector of length {self.n}, got shape {w.shape}")
        return np.array([w[list(c)].sum() for c in self.classes])

    def ideal_from_classes(self, class_set) -> LowerIdeal:
        cs = tuple(sorted(class_set))
        verts = frozenset(v for i in cs for v in self.classes[i])
        return LowerIdeal(verts, cs)

    @classmethod
    def from_members(cls, n: int, members) -> "DistributiveLattice":
        """Build the representation from an explicit family of member sets.

        The family must be closed under union and intersection (checked).
        Vertices missing from every member become forced-out singleton
        classes; classes present in every member become forced-in.
        """
        fam = {frozenset(m) for m in members}
        if not fam:
            raise ValueError("the member family is empty")
        for s in fam:
            for v in s:
                if not (0 <= v < n):
                    raise ValueError(f"vertex index {v} out of range for n={n}")
        fam_list = sorted(fam, key=lambda s: (len(s), sorted(s)))
        for a in fam_list:
            for b in fam_list:
                if (a | b) not in fam or (a & b) not in fam:
                    raise ValueError(
                        f"family is not closed under union/intersection for "
                        f"{sorted(a)} and {sorted(b)}"
                    )
        covered = frozenset().union(*fam_list)
        principal = {}
        for v in sorted(covered):
            d = covered
            for s in fam_list:
                if v in s:
                    d = d & s
            principal[v] = d
        groups = {}
        for v in sorted(covered):
            groups.setdefault(principal[v], []).append(v)
        class_sets = sorted(groups.values(), key=lambda g: g[0])
        classes = [frozenset(g) for g in class_sets]
        for v in sorted(set(range(n)) - covered):
            classes.append(frozenset([v]))
        reps = [principal.get(min(c)) for c in classes]
        order = _containment_order(reps)
        bottom = frozenset.intersection(*fam_list)
        forced_in = frozenset(i for i, c in enumerate(classes) if c <= bottom)
        forced_out = frozenset(i for i, c in enumerate(classes) if not (c <= covered))
        lat = cls(n, tuple(classes), order, forced_in, forced_out)
        for s in fam_list:
            if not lat.is_member(s):
                raise ValueError(f"family member {sorted(s)} is not a lower ideal of its own lattice")
        return lat

    def is_member(self, subset) -> bool:
        s = frozenset(subset)
        for v in s:
            if not (0 <= v < self.n):
                raise ValueError(f"vertex index {v} out of range for n={self.n}")
        chosen = set()
        for idx, c in enumerate(self.classes):
            if c <= s:
                chosen.add(idx)
            elif c & s:
                return False
        if not self.forced_in <= chosen:
            return False
        if chosen & self.forced_out:
            return False
        for j in chosen:
            if not self._below[j] <= chosen:
                return False
        return True

    # -- enumeration ----------------------------------------------------

    def _enumerate_classes(self, limit: int) -> list[frozenset[int]]:
        found = {frozenset(self.forced_in)}
        frontier = [frozenset(self.forced_in)]
        k = self.num_classes
        while frontier:
            nxt = []
            for s in frontier:
                for j in range(k):
                    if j in s or j in self.forced_out:
                        continue
                    if not (self._below[j] - {j}) <= s:
                        continue
                    t = s | {j}
                    if t not in found:
                        found.add(t)
                        if len(found) > limit:
                            raise IdealLimitError(
                                f"lattice has more than {limit} lower ideals"
                            )
                        nxt.append(t)
            frontier = nxt
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def _enumerated(self):
        """Cached (ideal class sets, membership matrix) or None when too large."""
        cache = self._enum_cache
        if cache:
            return cache[0]
        result = None
        if self.num_classes <= _ENUM_CLASS_CAP:
            try:
                sets = self._enumerate_classes(IDEAL_LIMIT)
                mat = np.zeros((len(sets), self.num_classes), dtype=bool)
                for r, s in enumerate(sets):
                    mat[r, sorted(s)] = True
                result = (sets, mat)
            except IdealLimitError:
                result = None
        cache.append(result)
        return result


def _containment_order(principals):
    """Cover arcs (i, j) for classes given by their principal ideals."""
    k = len(principals)
    leq = [[False] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if i == j or principals[i] is None or principals[j] is None:
                continue
            leq[i][j] = principals[i] < principals[j]
    arcs = []
    for i in range(k):
        for j in range(k):
            if not leq[i][j]:
                continue
            if any(leq[i][m] and leq[m][j] for m in range(k)):
                continue
            arcs.append((i, j))
    return tuple(arcs)


@lru_cache(maxsize=256)
def kernel(transformation: SubmodularTransformation) -> DistributiveLattice:
    """Birkhoff representation of {S : F_e(S) = 0 for every edge e}.

    For each vertex v the minimal zero set containing v is found by one
    restricted minimization of the edge sum; vertices with identical minimal
    sets form one class, and containment of those sets gives the order.
    Normalization guarantees the ground set is a zero set, so every vertex
    has one; the forced-out fallback below only guards against a restricted
    minimization coming back numerically positive.
    """
    tr = transformation
    n = tr.n
    principal = {}
    uncovered = []
    for v in range(n):
        res = sfm(tr, forced_in=(v,))
        if res.value <= 1e-9 * (1.0 + abs(res.value)):
            principal[v] = res.minimizer
        else:
            uncovered.append(v)
    groups = {}
    for v in sorted(principal):
        groups.setdefault(principal[v], []).append(v)
    class_sets = sorted(groups.values(), key=lambda g: g[0])
    classes = [frozenset(g) for g in class_sets]
    for v in uncovered:
        classes.append(frozenset([v]))
    reps = [principal.get(min(c)) for c in classes]
    arcs = _containment_order(reps)
    forced_out = frozenset(range(len(class_sets), len(classes)))
    return DistributiveLattice(n, tuple(classes), arcs, frozenset(), forced_out)


def is_member(lattice: DistributiveLattice, subset) -> bool:
    """True when the subset is a lower ideal (member) of the lattice."""
    return lattice.is_member(subset)


def enumerate_ideals(lattice: DistributiveLattice, limit: int = IDEAL_LIMIT) -> list[LowerIdeal]:
    """All members, sorted by size then lexicographic vertex order.

    Raises IdealLimitError when the family exceeds ``limit``.
    """
    sets = lattice._enumerate_classes(limit)
    ideals = [lattice.ideal_from_classes(s) for s in sets]
    ideals.sort(key=lambda li: (len(li.vertices), sorted(li.vertices)))
    return ideals


def _closure_cut(lattice, class_w, include, exclude):
    """Minimal maximizer of the class-weight sum over ideals via min cut."""
    k = lattice.num_classes
    s, t = k, k + 1
    arcs = []
    for i, j in lattice.hasse_arcs:
        arcs.append((j, i, math.inf))
    for i in range(k):
        w = class_w[i]
        if i in include:
            arcs.append((s, i, math.inf))
        elif i in exclude:
            arcs.append((i, t, math.inf))
        if w > 0.0:
            arcs.append((s, i, w))
        elif w < 0.0:
            arcs.append((i, t, -w))
    net = FlowNetwork(k + 2, s, t, tuple(arcs))
    _, side, _ = max_flow_min_cut(net)
    return frozenset(i for i in side if i < k)


def max_weight_ideal(
    lattice: DistributiveLattice,
    weights,
    must_include=(),
    must_exclude=(),
) -> tuple[float, LowerIdeal | None]:
    """Maximize a modular weight over members, returning a minimal maximizer.

    ``must_include`` and ``must_exclude`` are vertex sets restricting the
    members considered; when no member satisfies them the result is
    (-inf, None).  Small lattices use the cached enumeration, large ones the
    maximal-closure min-cut on the class DAG.
    """
    class_w = lattice.class_weights(weights)
    include = set(lattice.forced_in)
    exclude = set(lattice.forced_out)
    for v in must_include:
        include |= lattice._below[lattice.class_of(v)]
    for v in must_exclude:
        exclude |= lattice._above[lattice.class_of(v)]
    if include & exclude:
        return -math.inf, None

    enum = lattice._enumerated()
    if enum is not None:
        sets, mat = enum
        ok = np.ones(len(sets), dtype=bool)
        for i in include:
            ok &= mat[:, i]
        for i in exclude:
            ok &= ~mat[:, i]
        if not ok.any():
            return -math.inf, None
        vals = mat @ class_w
        vals[~ok] = -np.inf
        best = vals.max()
        atol = 1e-12 * (1.0 + abs(best))
        tied = np.nonzero(vals >= best - atol)[0]
        # maximizers are closed under intersection, so the unique minimal one
        # is the first hit in the (size, lex) enumeration order
        chosen = frozenset(sets[tied[0]])
        ideal = lattice.ideal_from_classes(chosen)
        return float(class_w[list(chosen)].sum()) if chosen else 0.0, ideal

    side = _closure_cut(lattice, class_w, include, exclude)
    if not (include <= side) or (side & exclude):
        return -math.inf, None
    ideal = lattice.ideal_from_classes(side)
    value = float(class_w[list(side)].sum()) if side else 0.0
    return value, ideal


def greedy_lmo(lattice: DistributiveLattice, b, c) -> np.ndarray:
    """Vertex of {x : x(S) <= -b(S) for members S, -beta <= x <= 0} minimizing <c, x>.

    beta = max(max(b), 0).  The box replaces the pointwise bound x >= -b so
    the region always contains the regression optimum -z, the origin when
    the system is feasible, and -beta*1; its squared diameter is at most
    n*max(b)^2, which is what the Frank-Wolfe rate certificate needs.

    The sweep pins x(v) = -beta wherever c(v) >= 0 and relaxes the remaining
    coordinates toward 0 in ascending c order; each relaxation amount is the
    exact marginal capacity of the tightest member constraint, obtained from
    a modular maximization over the lattice.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n = lattice.n
    if b.shape != (n,) or c.shape != (n,):
        raise ValueError(f"expected vectors of length {n}")
    beta = max(float(b.max(initial=0.0)), 0.0)
    x = np.full(n, -beta)
    if beta == 0.0:
        return np.zeros(n)
    order = sorted((v for v in range(n) if c[v] < 0.0), key=lambda v: (c[v], v))
    if not order:
        return x

    enum = lattice._enumerated()
    if enum is not None:
        sets, mat = enum
        class_sizes = np.array([len(cl) for cl in lattice.classes], dtype=float)
        bsum = mat @ lattice.class_weights(b)
        outside = mat @ class_sizes  # |S \ T| with T empty
        vert_col = {}
        q_prev = float((bsum - beta * outside).max())
        for v in order:
            col = mat[:, lattice.class_of(v)].astype(float)
            outside -= col
            q_cur = float((bsum - beta * outside).max())
            marginal = min(max(beta - (q_cur - q_prev), 0.0), beta)
            x[v] = -beta + marginal
            q_prev = q_cur
        return x

    in_t = np.zeros(n, dtype=bool)
    q_prev, _ = max_weight_ideal(lattice, b - beta)
    for v in order:
        in_t[v] = True
        w = b - beta * (~in_t)
        q_cur, _ = max_weight_ideal(lattice, w)
        marginal = min(max(beta - (q_cur - q_prev), 0.0), beta)
        x[v] = -beta + marginal
        q_prev = q_cur
    return x
