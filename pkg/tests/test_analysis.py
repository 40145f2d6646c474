"""Tests for effective resistance and current-flow centrality."""

import math

import numpy as np
import pytest

from sublap import (
    DirectedCut,
    GroundSet,
    HypergraphCut,
    SolverConfig,
    SubmodularTransformation,
    UndirectedCut,
    betweenness_centrality,
    betweenness_report,
    closeness_centrality,
    closeness_report,
    effective_resistance,
    resistance_matrix,
    triangle_check,
)
from conftest import coverage_table, random_connected_undirected


def make(n, edges):
    return SubmodularTransformation(GroundSet(n), tuple(edges))


def path(n, weight=1.0):
    return make(n, [UndirectedCut(v, v + 1, weight) for v in range(n - 1)])


def test_series_resistance():
    tr = path(3)
    rv = effective_resistance(tr, 0, 2)
    assert rv.value == pytest.approx(2.0, abs=1e-7)
    assert not rv.degraded
    assert effective_resistance(tr, 0, 1).value == pytest.approx(1.0, abs=1e-7)


def test_parallel_resistance():
    tr = make(2, [UndirectedCut(0, 1), UndirectedCut(0, 1)])
    rv = effective_resistance(tr, 0, 1)
    assert rv.value == pytest.approx(0.5, abs=1e-7)


def test_energy_identity_witnesses():
    tr = path(3, weight=2.0)
    rv = effective_resistance(tr, 0, 2)
    assert rv.witness_x is not None and rv.witness_phi is not None
    assert float(rv.witness_phi @ rv.witness_phi) == pytest.approx(rv.value, rel=1e-6)


def test_diode_is_one_way():
    tr = make(2, [DirectedCut(0, 1)])
    assert effective_resistance(tr, 0, 1).value == pytest.approx(1.0, abs=1e-7)
    rv = effective_resistance(tr, 1, 0)
    assert rv.value == math.inf
    assert rv.witness_x is None
    assert not rv.degraded


def test_hyperedge_resistance_is_symmetric():
    tr = make(3, [HypergraphCut((0, 1, 2))])
    for u in range(3):
        for v in range(3):
            if u != v:
                assert effective_resistance(tr, u, v).value == pytest.approx(1.0, abs=1e-6)


def test_resistance_validation():
    tr = path(2)
    with pytest.raises(ValueError, match="differ"):
        effective_resistance(tr, 0, 0)
    with pytest.raises(ValueError, match="out of range"):
        effective_resistance(tr, 0, 5)


def test_degraded_flag_on_an_uncertified_solve():
    rng = np.random.default_rng(387)
    n = 6
    edges = []
    for _ in range(4):
        k = int(rng.integers(3, 5))
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        edges.append(coverage_table(rng, support))
    tr = make(n, edges)
    rv = effective_resistance(tr, 0, 5, SolverConfig(tolerance=1e-10, max_iterations=1))
    assert rv.degraded


def test_triangle_bookkeeping():
    tr = path(4)
    lhs, rhs, holds = triangle_check(tr, 0, 3, 1)
    assert lhs == pytest.approx(3.0, abs=1e-6)
    assert rhs == pytest.approx(1.0 + 2.0, abs=1e-6)
    assert holds
    diode = make(3, [DirectedCut(0, 1), DirectedCut(1, 2)])
    lhs, rhs, holds = triangle_check(diode, 2, 0, 1)
    assert math.isinf(rhs)
    assert holds
    with pytest.raises(ValueError, match="distinct"):
        triangle_check(tr, 0, 0, 1)


@pytest.mark.parametrize("seed", range(6))
def test_triangle_inequality_on_random_graphs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 8))
    tr = random_connected_undirected(rng, n)
    for _ in range(5):
        u, v, w = rng.choice(n, size=3, replace=False).tolist()
        _, _, holds = triangle_check(tr, int(u), int(v), int(w))
        assert holds


def test_resistance_matrix_matches_pairs():
    tr = make(3, [UndirectedCut(0, 1), DirectedCut(1, 2)])
    mat = resistance_matrix(tr)
    assert np.all(np.diag(mat) == 0.0)
    for u in range(3):
        for v in range(3):
            if u != v:
                expected = effective_resistance(tr, u, v).value
                if math.isinf(expected):
                    assert math.isinf(mat[u, v])
                else:
                    assert mat[u, v] == pytest.approx(expected, abs=1e-6)


def test_resistance_matrix_threads_agree():
    rng = np.random.default_rng(9)
    tr = random_connected_undirected(rng, 6)
    one = resistance_matrix(tr, threads=1)
    two = resistance_matrix(tr, threads=2)
    assert np.max(np.abs(one - two)) <= 1e-8


def test_closeness_of_a_single_edge():
    tr = path(2)
    assert closeness_centrality(tr, 0) == pytest.approx(2.0, abs=1e-6)


def test_closeness_of_a_star():
    # center at distance 1 from each leaf, leaves at distance 2 apart
    tr = make(4, [UndirectedCut(0, v) for v in (1, 2, 3)])
    assert closeness_centrality(tr, 0) == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert closeness_centrality(tr, 1) == pytest.approx(4.0 / 5.0, abs=1e-6)


def test_closeness_vanishes_when_disconnected():
    tr = make(3, [UndirectedCut(0, 1)])
    assert closeness_centrality(tr, 0) == 0.0


def test_betweenness_on_a_path():
    tr = path(3)
    assert betweenness_centrality(tr, 1) == pytest.approx(2.0, abs=1e-6)
    assert betweenness_centrality(tr, 0) == pytest.approx(0.0, abs=1e-8)


def test_betweenness_rejects_hyperedges():
    tr = make(3, [HypergraphCut((0, 1, 2))])
    with pytest.raises(ValueError, match="graph"):
        betweenness_centrality(tr, 0)


def test_closeness_report_is_sorted():
    tr = make(4, [UndirectedCut(0, v) for v in (1, 2, 3)])
    report = closeness_report(tr)
    assert report.measure == "closeness"
    assert [v for v, _ in report.scores][0] == 0
    values = [s for _, s in report.scores]
    assert values == sorted(values, reverse=True)
    # leaves tie and are listed by index
    assert [v for v, _ in report.scores][1:] == [1, 2, 3]


def test_betweenness_report_pairs():
    tr = make(3, [DirectedCut(0, 1), DirectedCut(1, 2)])
    report = betweenness_report(tr)
    assert report.measure == "betweenness"
    assert (0, 2) in report.pair_values
    assert (2, 0) not in report.pair_values
    tau = report.pair_values[(0, 2)]
    assert tau[1] == pytest.approx(2.0, abs=1e-6)


def test_reports_agree_with_scalar_calls():
    rng = np.random.default_rng(21)
    tr = random_connected_undirected(rng, 5)
    closeness = closeness_report(tr)
    for v, score in closeness.scores:
        assert score == pytest.approx(closeness_centrality(tr, v), abs=1e-6)
    betweenness = betweenness_report(tr)
    for v, score in betweenness.scores:
        assert score == pytest.approx(betweenness_centrality(tr, v), abs=1e-6)
