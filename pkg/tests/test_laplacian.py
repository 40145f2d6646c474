"""Energy descent solver: operator identities, certificates, edge cases."""

import numpy as np
import pytest

from sublap import (
    DirectedCut,
    GroundSet,
    Problem,
    Solution,
    SolverConfig,
    SubmodularTransformation,
    UndirectedCut,
    apply,
    center_components,
    certify,
    check_feasible,
    connected_components,
    energy,
    selection_residual,
    solve_system,
)
from sublap.laplacian import STATUS_INFEASIBLE, STATUS_ITERATION_LIMIT, STATUS_OPTIMAL
from conftest import (
    coverage_table,
    gauge_align,
    laplacian_matrix,
    pinv_solve,
    random_connected_undirected,
    random_transformation,
    zero_sum_vector,
)


@pytest.mark.parametrize("seed", range(6))
def test_apply_is_the_matrix_product_on_graphs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    tr = random_connected_undirected(rng, n)
    L = laplacian_matrix(tr)
    for _ in range(5):
        x = rng.normal(size=n)
        assert np.allclose(apply(tr, x), L @ x, atol=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_energy_identity(seed):
    rng = np.random.default_rng(20 + seed)
    n = int(rng.integers(3, 8))
    tr = random_transformation(rng, n, int(rng.integers(1, 6)))
    x = rng.normal(size=n)
    assert energy(tr, x) == pytest.approx(float(x @ apply(tr, x)), rel=1e-9, abs=1e-12)
    assert energy(tr, x + 2.0) == pytest.approx(energy(tr, x), abs=1e-9)


def test_solve_matches_pinv_small():
    rng = np.random.default_rng(3)
    tr = random_connected_undirected(rng, 6)
    b = zero_sum_vector(rng, 6)
    sol = solve_system(Problem(tr, b))
    assert sol.status == STATUS_OPTIMAL
    ref = pinv_solve(tr, b)
    assert np.max(np.abs(gauge_align(sol.x, ref) - ref)) < 1e-6


def test_conducting_diode():
    tr = SubmodularTransformation(GroundSet(2), (DirectedCut(0, 1),))
    sol = solve_system(Problem(tr, np.array([1.0, -1.0])))
    assert sol.status == STATUS_OPTIMAL
    assert sol.x[0] - sol.x[1] == pytest.approx(1.0, abs=1e-6)
    assert sol.phi[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(-0.5, abs=1e-6)


def test_blocked_diode_is_infeasible():
    tr = SubmodularTransformation(GroundSet(2), (DirectedCut(0, 1),))
    sol = solve_system(Problem(tr, np.array([-1.0, 1.0])))
    assert sol.status == STATUS_INFEASIBLE
    assert sol.violating_set == frozenset({1})


def test_negative_total_demand_is_infeasible():
    tr = SubmodularTransformation(GroundSet(2), (DirectedCut(0, 1),))
    sol = solve_system(Problem(tr, np.array([-1.0, 0.0])))
    assert sol.status == STATUS_INFEASIBLE
    assert sol.violating_set == frozenset({0, 1})


def test_check_feasible_examples():
    tr = SubmodularTransformation(GroundSet(2), (DirectedCut(0, 1),))
    ok, witness = check_feasible(Problem(tr, np.array([1.0, -1.0])))
    assert ok and witness is None
    ok, witness = check_feasible(Problem(tr, np.array([-1.0, 1.0])))
    assert not ok and witness == frozenset({1})


def test_certificate_at_optimum_and_away_from_it():
    rng = np.random.default_rng(8)
    tr = random_connected_undirected(rng, 5)
    b = zero_sum_vector(rng, 5)
    sol = solve_system(Problem(tr, b))
    gap, feasible, witness = certify(Problem(tr, b), sol.x)
    assert feasible and witness is None
    assert abs(gap) <= 1e-6 * (1.0 + abs(sol.objective))
    gap_bad, _, _ = certify(Problem(tr, b), sol.x + rng.normal(size=5))
    assert gap_bad > abs(gap)


def test_selection_residual_vanishes_at_optimum():
    rng = np.random.default_rng(12)
    tr = random_connected_undirected(rng, 5)
    b = zero_sum_vector(rng, 5)
    sol = solve_system(Problem(tr, b))
    norm, vec = selection_residual(tr, b, sol.x)
    assert norm < 1e-6 * (1.0 + np.linalg.norm(b))
    assert vec.shape == (5,)


def test_components_and_centering():
    tr = SubmodularTransformation(
        GroundSet(4), (UndirectedCut(0, 1), UndirectedCut(2, 3))
    )
    comps = connected_components(tr)
    groups = {frozenset(int(v) for v in comp) for comp in comps}
    assert groups == {frozenset({0, 1}), frozenset({2, 3})}
    x = np.array([1.0, 3.0, -2.0, 2.0])
    centered = center_components(x, comps)
    assert centered[0] + centered[1] == pytest.approx(0.0, abs=1e-12)
    assert centered[2] + centered[3] == pytest.approx(0.0, abs=1e-12)
    # solver output is centered per component as well
    b = np.array([1.0, -1.0, 0.5, -0.5])
    sol = solve_system(Problem(tr, b))
    assert sol.status == STATUS_OPTIMAL
    assert sol.x[0] + sol.x[1] == pytest.approx(0.0, abs=1e-9)
    assert sol.x[2] + sol.x[3] == pytest.approx(0.0, abs=1e-9)


def test_iteration_limit_is_reported():
    # Table edges give a piecewise quadratic objective with many kinks,
    # so a single accepted step cannot reach the certified optimum here.
    rng = np.random.default_rng(387)
    n = 6
    edges = []
    for _ in range(4):
        k = int(rng.integers(3, 5))
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        edges.append(coverage_table(rng, support))
    tr = SubmodularTransformation(GroundSet(n), tuple(edges))
    b = zero_sum_vector(rng, n)
    full = solve_system(Problem(tr, b), SolverConfig(tolerance=1e-10))
    assert full.status == STATUS_OPTIMAL
    sol = solve_system(Problem(tr, b), SolverConfig(tolerance=1e-10, max_iterations=1))
    assert sol.status == STATUS_ITERATION_LIMIT
    assert sol.iterations == 1
    assert sol.gap > 1e-3


def test_solution_fields_round_out():
    tr = SubmodularTransformation(GroundSet(2), (UndirectedCut(0, 1),))
    sol = solve_system(Problem(tr, np.array([1.0, -1.0])))
    assert isinstance(sol, Solution)
    assert sol.phi.shape == (1,)
    assert sol.dual_feasible
    # The certified gap is nonnegative in exact arithmetic; allow roundoff.
    assert sol.gap >= -1e-12


def test_validation():
    tr = SubmodularTransformation(GroundSet(2), (UndirectedCut(0, 1),))
    with pytest.raises(ValueError):
        Problem(tr, np.zeros(3))
    with pytest.raises(ValueError):
        Problem(tr, np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        SolverConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(armijo=1.5)
    with pytest.raises(ValueError):
        SolverConfig(certificate_cadence=0)
