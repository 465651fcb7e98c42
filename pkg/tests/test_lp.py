import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from crewpair import oracles
from crewpair.lp import (
    InfeasibleError, SetCoverInstance, dump_instance, greedy_cover, load_instance, solve_ip, solve_lp,
)

from conftest import random_instance


def test_two_flight_example():
    inst = SetCoverInstance([(0,), (1,), (0, 1)], [1.0, 1.0, 1.5], 2)
    sol = solve_lp(inst)
    assert sol.cost == pytest.approx(1.5)
    assert sol.primal == pytest.approx([0, 0, 1])
    assert sol.duals.sum() == pytest.approx(1.5)


def test_single_column():
    sol = solve_lp(SetCoverInstance([(0, 1, 2)], [7.0], 3))
    assert sol.cost == pytest.approx(7.0) and sol.primal[0] == pytest.approx(1.0)


def test_uncovered_row_is_infeasible():
    sol = solve_lp(SetCoverInstance([(0,)], [1.0], 2))
    assert sol.status == "infeasible" and not sol.optimal
    with pytest.raises(InfeasibleError):
        solve_ip(SetCoverInstance([(0,)], [1.0], 2))


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        SetCoverInstance([(0,)], [-1.0], 1)


@pytest.mark.parametrize("seed", range(10))
def test_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(3, 7)), int(rng.integers(5, 13)))
    sol = solve_lp(inst)
    assert sol.cost == pytest.approx(oracles.lp_vertex_optimum(inst), rel=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_duals_certify_optimality(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, 30, 120)
    sol = solve_lp(inst)
    A = inst.matrix()
    assert np.all(A @ sol.primal >= 1 - 1e-7)
    assert np.all(sol.duals >= 0)
    assert np.all(inst.costs - A.T @ sol.duals >= -1e-6)         # dual feasible
    assert sol.duals.sum() == pytest.approx(sol.cost, rel=1e-9)   # strong duality
    ref = linprog(inst.costs, A_ub=-A, b_ub=-np.ones(30), bounds=(0, None), method="highs")
    assert sol.cost == pytest.approx(ref.fun, rel=1e-9)


def test_adding_a_column_never_raises_the_optimum():
    rng = np.random.default_rng(7)
    inst = random_instance(rng, 20, 40)
    base = solve_lp(inst).cost
    for _ in range(10):
        col = tuple(sorted(rng.choice(20, size=3, replace=False).tolist()))
        inst = SetCoverInstance(inst.columns + [col], np.append(inst.costs, rng.integers(1, 20)), 20)
        cost = solve_lp(inst).cost
        assert cost <= base + 1e-9
        base = cost


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lp_against_highs_property(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 25))
    inst = random_instance(rng, m, int(rng.integers(m, 4 * m)))
    sol = solve_lp(inst)
    ref = linprog(inst.costs, A_ub=-inst.matrix(), b_ub=-np.ones(m), bounds=(0, None), method="highs")
    assert sol.cost == pytest.approx(ref.fun, rel=1e-7)
    assert sol.duals.sum() == pytest.approx(sol.cost, rel=1e-7)


def test_integral_lp_gives_equal_ip():
    inst = SetCoverInstance([(0, 1), (2,), (0,), (1, 2)], [2.0, 1.0, 5.0, 5.0], 3)
    assert solve_lp(inst).cost == pytest.approx(3.0)
    assert solve_ip(inst).cost == pytest.approx(3.0)


@pytest.mark.parametrize("seed", range(10))
def test_ip_matches_subset_search(seed):
    rng = np.random.default_rng(200 + seed)
    inst = random_instance(rng, 8, int(rng.integers(10, 19)))
    res = solve_ip(inst)
    ref, chosen = oracles.ip_subset_optimum(inst)
    assert res.cost == ref
    assert res.proven
    covered = {f for j in res.selected for f in inst.columns[j]}
    assert covered == set(range(8))


def test_ip_on_fractional_triangle():
    # odd cycle: LP 1.5, IP 2
    inst = SetCoverInstance([(0, 1), (1, 2), (0, 2)], [1.0, 1.0, 1.0], 3)
    assert solve_lp(inst).cost == pytest.approx(1.5)
    res = solve_ip(inst)
    assert res.cost == 2.0 and res.root_lp == pytest.approx(1.5)


def test_ip_budget_returns_incumbent():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, 25, 80)
    res = solve_ip(inst, cutoff=1)
    assert not res.proven
    covered = {f for j in res.selected for f in inst.columns[j]}
    assert covered == set(range(25))
    assert res.cost >= solve_lp(inst).cost - 1e-9


def test_greedy_cover_covers():
    rng = np.random.default_rng(9)
    inst = random_instance(rng, 15, 30)
    chosen = greedy_cover(inst)
    assert {f for j in chosen for f in inst.columns[j]} == set(range(15))
    assert greedy_cover(SetCoverInstance([(0,)], [1.0], 2)) is None


def test_instance_round_trip(tmp_path):
    inst = random_instance(np.random.default_rng(1), 6, 9)
    dump_instance(inst, tmp_path / "i.txt")
    back = load_instance(tmp_path / "i.txt")
    assert back.columns == inst.columns and np.array_equal(back.costs, inst.costs)
    assert back.num_flights == 6
