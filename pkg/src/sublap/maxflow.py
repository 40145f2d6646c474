"""Push-relabel maximum flow with residual-based minimal and maximal source cuts.

Highest-label selection with the gap heuristic.  Infinite capacities are
replaced by a sentinel equal to the sum of all finite capacities plus one, so
any cut avoiding them beats any cut through them.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


class UnboundedCutError(RuntimeError):
    """Every source-sink cut has infinite capacity."""


@dataclass(frozen=True)
class FlowNetwork:
    """Directed capacitated network; capacities are nonnegative floats or math.inf."""

    num_nodes: int
    source: int
    sink: int
    arcs: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        for u, v, c in self.arcs:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"arc ({u}, {v}) out of range")
            if not (c >= 0.0):
                raise ValueError(f"arc ({u}, {v}) has negative capacity {c}")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")


@dataclass
class FlowAssignment:
    """Arc flows aligned with the network's arc list.

    ``edge_vars`` is populated by the quadratic flow dual: it maps
    (edge index, extreme point index) to the dual variable on that extreme
    point of the edge's base polytope.
    """

    network: FlowNetwork
    arc_flows: tuple[float, ...]
    edge_vars: dict[tuple[int, int], float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


class _Graph:
    __slots__ = ("n", "head", "to", "cap", "nxt")

    def __init__(self, n):
        self.n = n
        self.head = [-1] * n
        self.to = []
        self.cap = []
        self.nxt = []

    def add(self, u, v, c):
        self.to.append(v)
        self.cap.append(c)
        self.nxt.append(self.head[u])
        self.head[u] = len(self.to) - 1
        self.to.append(u)
        self.cap.append(0.0)
        self.nxt.append(self.head[v])
        self.head[v] = len(self.to) - 1


def max_flow_min_cut(net: FlowNetwork) -> tuple[float, frozenset[int], FlowAssignment]:
    """Maximum flow value, the minimal source-side min cut, and the arc flows.

    The returned cut is the set of nodes reachable from the source in the
    residual graph (source included); it is the unique inclusion-minimal
    minimum cut.  Raises UnboundedCutError when every cut is infinite.
    """
    finite_total = sum(c for _, _, c in net.arcs if math.isfinite(c))
    sentinel = finite_total + 1.0
    eps = 1e-12 * (1.0 + sentinel)

    g = _Graph(net.num_nodes)
    arc_pos = []
    for u, v, c in net.arcs:
        arc_pos.append(len(g.to))
        g.add(u, v, c if math.isfinite(c) else sentinel)

    n, s, t = net.num_nodes, net.source, net.sink
    height = [0] * n
    excess = [0.0] * n
    count = [0] * (2 * n + 1)
    count[0] = n
    cur = list(g.head)

    height[s] = n
    count[0] -= 1
    count[n] += 1
    i = g.head[s]
    while i != -1:
        if g.cap[i] > eps:
            delta = g.cap[i]
            g.cap[i] -= delta
            g.cap[i ^ 1] += delta
            excess[g.to[i]] += delta
            excess[s] -= delta
        i = g.nxt[i]

    # highest-label buckets
    buckets: list[list[int]] = [[] for _ in range(2 * n + 1)]
    in_bucket = [False] * n
    highest = 0

    def activate(v):
        nonlocal highest
        if v not in (s, t) and excess[v] > eps and not in_bucket[v]:
            in_bucket[v] = True
            buckets[height[v]].append(v)
            highest = max(highest, height[v])

    for v in range(n):
        activate(v)

    def relabel(v):
        nonlocal highest
        old = height[v]
        new_h = 2 * n
        i = g.head[v]
        while i != -1:
            if g.cap[i] > eps:
                new_h = min(new_h, height[g.to[i]] + 1)
            i = g.nxt[i]
        count[old] -= 1
        # gap heuristic: heights strictly between old and n become unreachable
        if count[old] == 0 and old < n:
            for w in range(n):
                if old < height[w] < n and w != s:
                    count[height[w]] -= 1
                    height[w] = n + 1
                    count[n + 1] += 1
        height[v] = new_h
        count[new_h] += 1
        cur[v] = g.head[v]

    while highest >= 0:
        while highest >= 0 and not buckets[highest]:
            highest -= 1
        if highest < 0:
            break
        v = buckets[highest].pop()
        in_bucket[v] = False
        if excess[v] <= eps or v in (s, t):
            continue
        while excess[v] > eps:
            if cur[v] == -1:
                relabel(v)
                if height[v] >= 2 * n:
                    break
                continue
            i = cur[v]
            w = g.to[i]
            if g.cap[i] > eps and height[v] == height[w] + 1:
                delta = min(excess[v], g.cap[i])
                g.cap[i] -= delta
                g.cap[i ^ 1] += delta
                excess[v] -= delta
                excess[w] += delta
                activate(w)
            else:
                cur[v] = g.nxt[i]
        activate(v)
        highest = max(highest, height[v] if in_bucket[v] else 0)

    value = excess[t]
    if value > finite_total + 0.5:
        raise UnboundedCutError("all source-sink cuts are infinite")

    # minimal cut: residual reachability from the source
    reach = [False] * n
    reach[s] = True
    q = deque([s])
    while q:
        v = q.popleft()
        i = g.head[v]
        while i != -1:
            w = g.to[i]
            if g.cap[i] > eps and not reach[w]:
                reach[w] = True
                q.append(w)
            i = g.nxt[i]
    if reach[t]:
        raise AssertionError("sink reachable after termination; max-flow did not converge")

    flows = []
    for k, (u, v, c) in enumerate(net.arcs):
        c_eff = c if math.isfinite(c) else sentinel
        flows.append(max(c_eff - g.cap[arc_pos[k]], 0.0))
    return value, frozenset(v for v in range(n) if reach[v]), FlowAssignment(net, tuple(flows))


def maximal_cut_side(assign: FlowAssignment) -> frozenset[int]:
    """Inclusion-maximal minimum-cut source side for a finished max flow.

    The maximal side is the complement of the nodes that can still reach the
    sink in the residual graph, so no extra flow computation is needed.
    """
    net = assign.network
    finite_total = sum(c for _, _, c in net.arcs if math.isfinite(c))
    sentinel = finite_total + 1.0
    eps = 1e-12 * (1.0 + sentinel)

    n = net.num_nodes
    radj: list[list[int]] = [[] for _ in range(n)]
    for (u, v, c), f in zip(net.arcs, assign.arc_flows):
        c_eff = c if math.isfinite(c) else sentinel
        if c_eff - f > eps:
            radj[v].append(u)
        if f > eps:
            radj[u].append(v)
    co = [False] * n
    co[net.sink] = True
    q = deque([net.sink])
    while q:
        v = q.popleft()
        for u in radj[v]:
            if not co[u]:
                co[u] = True
                q.append(u)
    return frozenset(v for v in range(n) if not co[v])
