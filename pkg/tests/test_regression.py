"""Tests for demand correction on infeasible systems."""

import numpy as np
import pytest

from sublap import (
    DistributiveLattice,
    IdealLimitError,
    brute_force_regress,
    is_member,
    max_weight_ideal,
    regress_combinatorial,
    regress_frank_wolfe,
)
from conftest import dyadic_vector, enumerated_constraint_matrix, random_lattice

ALL_METHODS = (regress_combinatorial, regress_frank_wolfe, brute_force_regress)


def chain_lattice(n):
    """Members are the prefixes of 0, 1, ..., n-1."""
    classes = tuple((v,) for v in range(n))
    arcs = tuple((i, i + 1) for i in range(n - 1))
    return DistributiveLattice(n, classes, arcs)


def antichain_lattice(n):
    return DistributiveLattice(n, tuple((v,) for v in range(n)))


# ------------------------------------------------------------------- examples


def test_feasible_demand_needs_no_correction():
    lat = chain_lattice(2)
    b = np.array([-1.0, 1.0])
    for method in (regress_combinatorial, brute_force_regress):
        res = method(lat, b)
        assert np.max(np.abs(res.p)) <= 1e-9
        assert np.array_equal(res.b_prime, b + res.p)
    fw = regress_frank_wolfe(lat, b)
    assert float(fw.p @ fw.p) <= fw.gap_bound / (fw.iterations + 1.0)


def test_single_vertex():
    lat = antichain_lattice(1)
    res = regress_combinatorial(lat, np.array([2.0]))
    assert res.p[0] == pytest.approx(-2.0, abs=1e-12)
    assert res.b_prime[0] == pytest.approx(0.0, abs=1e-12)
    assert res.z[0] == pytest.approx(2.0, abs=1e-12)


def test_two_vertex_chain():
    # members are {} , {0}, {0,1}; with b = (3, -1) only the correction on
    # the prefix {0} binds and the cheapest fix is p = (-3, 0)
    lat = chain_lattice(2)
    b = np.array([3.0, -1.0])
    expected = np.array([-3.0, 0.0])
    assert np.max(np.abs(regress_combinatorial(lat, b).p - expected)) <= 1e-9
    assert np.max(np.abs(brute_force_regress(lat, b).p - expected)) <= 1e-8
    fw = regress_frank_wolfe(lat, b)
    assert np.max(np.abs(fw.p - expected)) <= 1e-3


def test_two_vertex_antichain():
    lat = antichain_lattice(2)
    b = np.array([1.0, 1.0])
    expected = np.array([-1.0, -1.0])
    assert np.max(np.abs(regress_combinatorial(lat, b).p - expected)) <= 1e-9
    assert np.max(np.abs(brute_force_regress(lat, b).p - expected)) <= 1e-8


def test_combinatorial_breakpoints_on_the_chain():
    lat = chain_lattice(2)
    res = regress_combinatorial(lat, np.array([3.0, -1.0]))
    assert res.method == "combinatorial"
    # vertex 0 leaves the minimal minimizer at alpha = 3 (z clips at 0)
    assert any(bp == pytest.approx(3.0) for bp in res.breakpoints)
    assert all(is_member(lat, side) for side in res.chain)
    for smaller, larger in zip(res.chain[1:], res.chain):
        assert smaller < larger


# ----------------------------------------------------------------- invariants


@pytest.mark.parametrize("seed", range(15))
def test_methods_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    lat = random_lattice(rng, n)
    b = dyadic_vector(rng, n)
    comb = regress_combinatorial(lat, b)
    oracle = brute_force_regress(lat, b)
    assert np.max(np.abs(comb.p - oracle.p)) <= 1e-6
    fw = regress_frank_wolfe(lat, b)
    best = float(oracle.p @ oracle.p)
    # FW objective obeys the 4n‖b‖²/(k+1) rate, and since ‖p‖² is strongly
    # convex the iterate itself is within the square root of that slack
    for k, val in enumerate(fw.objective_trace):
        assert val - best <= fw.gap_bound / (k + 1.0) + 1e-9
    slack = float(fw.p @ fw.p) - best
    assert float((fw.p - oracle.p) @ (fw.p - oracle.p)) <= max(slack, 0.0) + 1e-9


@pytest.mark.parametrize("seed", range(15))
def test_correction_invariants(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 8))
    lat = random_lattice(rng, n)
    b = dyadic_vector(rng, n)
    tol = 1e-9 * (1.0 + float(np.abs(b).sum()))
    for method in ALL_METHODS:
        res = method(lat, b)
        assert np.all(res.z >= 0.0)
        assert np.array_equal(res.p, -res.z)
        assert np.allclose(res.b_prime, b + res.p)
        # corrected demand satisfies every member constraint
        value, _ = max_weight_ideal(lat, res.b_prime)
        assert value <= tol


@pytest.mark.parametrize("seed", range(10))
def test_oracle_matches_enumerated_projection(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(2, 7))
    lat = random_lattice(rng, n)
    b = dyadic_vector(rng, n)
    res = brute_force_regress(lat, b)
    a_mat, sets = enumerated_constraint_matrix(lat)
    rhs = -(a_mat @ b)
    # feasibility and stationarity of the claimed projection
    assert np.max(a_mat @ res.p - rhs) <= 1e-8 * (1.0 + np.abs(b).sum())
    # any strictly feasible direction from p must increase the norm:
    # check optimality against scipy's generic QP-free route, a fine grid
    # of random feasible points obtained by projecting jitters
    for _ in range(20):
        q = res.p - np.abs(rng.normal(scale=0.5, size=n))
        violation = np.max(a_mat @ q - rhs)
        if violation <= 0.0:
            assert float(q @ q) >= float(res.p @ res.p) - 1e-9


def test_combinatorial_z_levels_match_chain():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        lat = random_lattice(rng, n)
        b = dyadic_vector(rng, n)
        res = regress_combinatorial(lat, b)
        edges = [min(min(b) - 1.0, 0.0)] + [float(bp) for bp in res.breakpoints]
        edges.append(max(max(b) + 1.0, edges[-1] + 1.0))
        for j, side in enumerate(res.chain):
            mid = 0.5 * (edges[j] + edges[j + 1])
            if mid <= 0.0:
                continue
            level = frozenset(int(v) for v in np.nonzero(res.z > mid)[0])
            assert level == side


def test_frank_wolfe_stays_in_the_box():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        lat = random_lattice(rng, n)
        b = dyadic_vector(rng, n)
        beta = max(float(np.max(b)), 0.0)
        fw = regress_frank_wolfe(lat, b)
        assert np.all(fw.p <= 1e-12)
        assert np.all(fw.p >= -beta - 1e-9)
        oracle = brute_force_regress(lat, b)
        assert np.all(oracle.p >= -beta - 1e-9)
        assert all(g >= -1e-12 for g in fw.gaps)


def test_frank_wolfe_iteration_budget():
    lat = chain_lattice(3)
    b = np.array([2.0, 1.0, -1.0])
    res = regress_frank_wolfe(lat, b, k_max=5)
    assert res.iterations <= 5
    assert len(res.objective_trace) == res.iterations + 1
    with pytest.raises(ValueError):
        regress_frank_wolfe(lat, b, k_max=-1)


def test_forced_in_is_rejected():
    lat = DistributiveLattice(2, ((0,), (1,)), (), frozenset({0}))
    for method in ALL_METHODS:
        with pytest.raises(ValueError, match="empty set"):
            method(lat, np.array([1.0, -1.0]))


def test_forced_out_vertices_are_untouched():
    lat = DistributiveLattice(3, ((0,), (1,), (2,)), (), frozenset(), frozenset({2}))
    b = np.array([2.0, -1.0, 5.0])
    res = regress_combinatorial(lat, b)
    assert res.p[2] == 0.0
    value, _ = max_weight_ideal(lat, res.b_prime)
    assert value <= 1e-9


def test_oracle_respects_the_enumeration_cap():
    lat = antichain_lattice(20)
    b = np.zeros(20)
    with pytest.raises(IdealLimitError):
        brute_force_regress(lat, b)
    res = regress_combinatorial(lat, b)
    assert np.all(res.p == 0.0)


def test_input_validation():
    lat = antichain_lattice(2)
    for method in ALL_METHODS:
        with pytest.raises(ValueError, match="length"):
            method(lat, np.zeros(3))
        with pytest.raises(ValueError, match="finite"):
            method(lat, np.array([np.inf, 0.0]))


def test_results_are_read_only():
    lat = antichain_lattice(2)
    res = regress_combinatorial(lat, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        res.p[0] = 5.0
