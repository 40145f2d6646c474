"""Submodular edge functions, transformations, and Lovász extension machinery.

A transformation attaches one nonnegative, normalized (F(empty) = F(V) = 0)
submodular function to each edge of a graph, hypergraph, or explicit table.
The Lovász extension of each edge function is evaluated by the greedy rule:
sort the edge's support by x descending (ties by ascending vertex index) and
accumulate marginal gains.  Cut-type edges use the equivalent closed forms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Table support cap.  Keeps the 2^k submodularity check and the k! extreme
# point enumeration at desk scale.
ARITY_BOUND = 12


class InvalidEdgeError(ValueError):
    """An edge function violates normalization, nonnegativity, or submodularity."""


@dataclass(frozen=True)
class GroundSet:
    """Vertex set {0, ..., n-1} with optional display labels."""

    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ground set must contain at least one element")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.n:
                raise ValueError(f"expected {self.n} labels, got {len(self.labels)}")
            if len(set(self.labels)) != self.n:
                raise ValueError("vertex labels must be unique")

    def name(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)


@dataclass(frozen=True)
class BaseVector:
    """A base polytope vector produced by the greedy rule.

    ``order`` is the support permutation that generated ``w``; the edge index
    is -1 for detached vectors.
    """

    w: np.ndarray
    edge_index: int = -1
    order: tuple[int, ...] = ()


class EdgeFunction:
    """One edge of a submodular transformation.

    Subclasses provide ``kind``, ``weight``, ``support`` and the unweighted
    ``_raw(mask)`` evaluation over support bitmasks (bit i of the mask is
    support[i]).
    """

    kind: str = "abstract"
    weight: float
    support: tuple[int, ...]

    def _raw(self, mask: int) -> float:
        raise NotImplementedError

    def _check_weight(self):
        if not (self.weight >= 0.0) or not np.isfinite(self.weight):
            raise InvalidEdgeError(f"edge weight must be finite and >= 0, got {self.weight}")

    def support_mask(self, subset: Iterable[int]) -> int:
        pos = {v: i for i, v in enumerate(self.support)}
        mask = 0
        for v in subset:
            i = pos.get(v)
            if i is not None:
                mask |= 1 << i
        return mask

    def value(self, subset: Iterable[int]) -> float:
        """F_e(S), the weighted cut value of the subset."""
        return self.weight * self._raw(self.support_mask(subset))

    def canonical_order(self, x: np.ndarray) -> tuple[int, ...]:
        return tuple(sorted(self.support, key=lambda v: (-x[v], v)))

    def greedy_vector(self, order: Sequence[int], n: int) -> np.ndarray:
        """Greedy base vector for an explicit support permutation."""
        w = np.zeros(n)
        mask = 0
        prev = 0.0
        pos = {v: i for i, v in enumerate(self.support)}
        for v in order:
            mask |= 1 << pos[v]
            cur = self._raw(mask)
            w[v] = self.weight * (cur - prev)
            prev = cur
        return w

    def lovasz(self, x: np.ndarray) -> float:
        """Lovász extension via the greedy rule; cut kinds override with closed forms."""
        order = self.canonical_order(x)
        mask = 0
        prev = 0.0
        total = 0.0
        pos = {v: i for i, v in enumerate(self.support)}
        for v in order:
            mask |= 1 << pos[v]
            cur = self._raw(mask)
            total += x[v] * (cur - prev)
            prev = cur
        return self.weight * total

    def subgradient(self, x: np.ndarray, n: int) -> np.ndarray:
        """Canonical subgradient: the greedy vector of the canonical order."""
        return self.greedy_vector(self.canonical_order(x), n)

    def extreme_points(self, n: int) -> list[np.ndarray]:
        """All extreme points of the base polytope, deduplicated.

        Generic path enumerates the k! greedy vectors; cut kinds override
        with their closed-form descriptions.
        """
        if len(self.support) > ARITY_BOUND:
            raise InvalidEdgeError(
                f"support size {len(self.support)} exceeds the arity bound {ARITY_BOUND}"
            )
        seen = {}
        for perm in itertools.permutations(self.support):
            w = self.greedy_vector(perm, n)
            key = tuple(np.round(w, 12))
            if key not in seen:
                seen[key] = w
        return list(seen.values())

    def active_extreme_points(self, x: np.ndarray, n: int) -> list[np.ndarray]:
        """Extreme points attaining the Lovász value at x (the subdifferential's vertices).

        Ties in x are grouped at a relative tolerance; the enumeration is over
        permutations within tie groups only.
        """
        tol = 1e-9 * (1.0 + max(abs(float(x[v])) for v in self.support))
        ordered = sorted(self.support, key=lambda v: (-x[v], v))
        groups: list[list[int]] = [[ordered[0]]]
        for v in ordered[1:]:
            if abs(x[v] - x[groups[-1][0]]) <= tol:
                groups[-1].append(v)
            else:
                groups.append([v])
        out = {}
        for parts in itertools.product(*(itertools.permutations(g) for g in groups)):
            order = tuple(v for part in parts for v in part)
            w = self.greedy_vector(order, n)
            key = tuple(np.round(w, 12))
            if key not in out:
                out[key] = w
            if len(out) > 2000:
                break
        return list(out.values())


@dataclass(frozen=True)
class UndirectedCut(EdgeFunction):
    """F(S) = weight if exactly one endpoint lies in S, else 0."""

    u: int
    v: int
    weight: float = 1.0
    kind = "undirected"

    def __post_init__(self):
        if self.u == self.v:
            raise InvalidEdgeError("undirected edge endpoints must differ")
        self._check_weight()

    @property
    def support(self) -> tuple[int, ...]:
        return (self.u, self.v)

    def _raw(self, mask: int) -> float:
        return 1.0 if mask in (1, 2) else 0.0

    def lovasz(self, x: np.ndarray) -> float:
        return self.weight * abs(float(x[self.u]) - float(x[self.v]))

    def extreme_points(self, n: int) -> list[np.ndarray]:
        w = np.zeros(n)
        w[self.u], w[self.v] = self.weight, -self.weight
        return [w, -w]


@dataclass(frozen=True)
class DirectedCut(EdgeFunction):
    """F(S) = weight if tail is in S and head is not, else 0 (a diode)."""

    tail: int
    head: int
    weight: float = 1.0
    kind = "directed"

    def __post_init__(self):
        if self.tail == self.head:
            raise InvalidEdgeError("arc endpoints must differ")
        self._check_weight()

    @property
    def support(self) -> tuple[int, ...]:
        return (self.tail, self.head)

    def _raw(self, mask: int) -> float:
        return 1.0 if mask == 1 else 0.0

    def lovasz(self, x: np.ndarray) -> float:
        return self.weight * max(float(x[self.tail]) - float(x[self.head]), 0.0)

    def extreme_points(self, n: int) -> list[np.ndarray]:
        w = np.zeros(n)
        w[self.tail], w[self.head] = self.weight, -self.weight
        return [np.zeros(n), w]


@dataclass(frozen=True)
class HypergraphCut(EdgeFunction):
    """All-or-nothing hyperedge cut: weight when S splits the hyperedge."""

    vertices: tuple[int, ...]
    weight: float = 1.0
    kind = "hyper"

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidEdgeError("hyperedge needs at least two vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise InvalidEdgeError("hyperedge vertices must be distinct")
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        self._check_weight()

    @property
    def support(self) -> tuple[int, ...]:
        return self.vertices

    def _raw(self, mask: int) -> float:
        full = (1 << len(self.vertices)) - 1
        return 1.0 if 0 < mask < full else 0.0

    def lovasz(self, x: np.ndarray) -> float:
        vals = [float(x[v]) for v in self.vertices]
        return self.weight * max(max(vals) - min(vals), 0.0)

    def extreme_points(self, n: int) -> list[np.ndarray]:
        out = []
        for a in self.vertices:
            for b in self.vertices:
                if a == b:
                    continue
                w = np.zeros(n)
                w[a], w[b] = self.weight, -self.weight
                out.append(w)
        return out


@dataclass(frozen=True)
class TableFunction(EdgeFunction):
    """Explicit small-support submodular function given by its 2^k value table.

    ``values[mask]`` is the unweighted value of the subset whose bit i is
    support[i].  Construction validates normalization, nonnegativity, and
    submodularity exhaustively.
    """

    support: tuple[int, ...]
    values: tuple[float, ...]
    weight: float = 1.0
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(v) for v in self.support))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        k = len(self.support)
        if k == 0:
            raise InvalidEdgeError("table support must be nonempty")
        if k > ARITY_BOUND:
            raise InvalidEdgeError(f"table support size {k} exceeds the arity bound {ARITY_BOUND}")
        if len(set(self.support)) != k:
            raise InvalidEdgeError("table support vertices must be distinct")
        if len(self.values) != (1 << k):
            raise InvalidEdgeError(f"expected {1 << k} table values, got {len(self.values)}")
        self._check_weight()
        vals = self.values
        scale = 1e-12 * (1.0 + max(abs(v) for v in vals))
        if abs(vals[0]) > scale or abs(vals[-1]) > scale:
            raise InvalidEdgeError("table is not normalized: values at the empty set and the full support must be 0")
        for mask, v in enumerate(vals):
            if v < -scale:
                raise InvalidEdgeError(f"table value for subset {self._names(mask)} is negative")
        # F(S+i) + F(S+j) >= F(S+i+j) + F(S) for all S and i < j outside S
        tol = 1e-9 * (1.0 + max(abs(v) for v in vals))
        for mask in range(1 << k):
            for i in range(k):
                if mask >> i & 1:
                    continue
                for j in range(i + 1, k):
                    if mask >> j & 1:
                        continue
                    lhs = vals[mask | 1 << i] + vals[mask | 1 << j]
                    rhs = vals[mask | 1 << i | 1 << j] + vals[mask]
                    if lhs < rhs - tol:
                        raise InvalidEdgeError(
                            "table is not submodular for the pair "
                            f"S={self._names(mask | 1 << i)}, T={self._names(mask | 1 << j)}"
                        )

    def _names(self, mask: int) -> str:
        members = [self.support[i] for i in range(len(self.support)) if mask >> i & 1]
        return "{" + ", ".join(str(v) for v in members) + "}"

    def _raw(self, mask: int) -> float:
        return float(self.values[mask])


@dataclass(frozen=True)
class SubmodularTransformation:
    """A ground set plus one submodular edge function per edge."""

    ground: GroundSet
    edges: tuple[EdgeFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        n = self.ground.n
        for i, e in enumerate(self.edges):
            for v in e.support:
                if not (0 <= v < n):
                    raise InvalidEdgeError(f"edges[{i}]: vertex index {v} out of range for n={n}")

    @property
    def n(self) -> int:
        return self.ground.n

    def cut_only(self) -> bool:
        """True when every edge is a graph or hypergraph cut (no tables)."""
        return all(e.kind in ("undirected", "directed", "hyper") for e in self.edges)

    def graph_only(self) -> bool:
        return all(e.kind in ("undirected", "directed") for e in self.edges)

    def total_value(self, subset: Iterable[int]) -> float:
        s = frozenset(subset)
        return sum(e.value(s) for e in self.edges)

    def relabel(self, perm: Sequence[int]) -> "SubmodularTransformation":
        """Transformation with vertex v renamed perm[v] (test helper for equivariance)."""
        out = []
        for e in self.edges:
            if e.kind == "undirected":
                out.append(UndirectedCut(perm[e.u], perm[e.v], e.weight))
            elif e.kind == "directed":
                out.append(DirectedCut(perm[e.tail], perm[e.head], e.weight))
            elif e.kind == "hyper":
                out.append(HypergraphCut(tuple(perm[v] for v in e.vertices), e.weight))
            else:
                out.append(TableFunction(tuple(perm[v] for v in e.support), e.values, e.weight))
        return SubmodularTransformation(GroundSet(self.n), tuple(out))


def _check_subset(subset: Iterable[int], n: int) -> frozenset[int]:
    s = frozenset(subset)
    for v in s:
        if not (0 <= v < n):
            raise ValueError(f"vertex index {v} out of range for n={n}")
    return s


def evaluate(edge: EdgeFunction, subset: Iterable[int], n: int | None = None) -> float:
    """F_e(S) for a subset of the ground set."""
    s = frozenset(subset) if n is None else _check_subset(subset, n)
    return edge.value(s)


def lovasz_eval(edge: EdgeFunction, x: np.ndarray) -> float:
    """Lovász extension f_e(x)."""
    return edge.lovasz(np.asarray(x, dtype=float))


def lovasz_subgradient(edge: EdgeFunction, x: np.ndarray, edge_index: int = -1) -> BaseVector:
    """Canonical subgradient of f_e at x as a BaseVector."""
    x = np.asarray(x, dtype=float)
    order = edge.canonical_order(x)
    return BaseVector(edge.greedy_vector(order, len(x)), edge_index, order)


def base_extreme_points(edge: EdgeFunction, n: int, edge_index: int = -1) -> list[BaseVector]:
    """Extreme points of the base polytope B(F_e), deduplicated."""
    return [BaseVector(w, edge_index) for w in edge.extreme_points(n)]
