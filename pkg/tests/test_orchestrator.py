from dataclasses import replace

import numpy as np
import pytest

from crewpair import orchestrator
from crewpair.combiner import CombinerConfigError
from crewpair.lp import SetCoverInstance, solve_lp
from crewpair.network import CostRules, Flight, FlightNetwork, LegalityRules
from crewpair.orchestrator import (
    LearningSchedule, Optimizer, RunConfig, baseline_pricing_subset, initial_solution, run,
)
from crewpair.pairings import enumerate_pairings
from crewpair.vgae import VgaeConfig

from conftest import toy_generated

RULES, COST = LegalityRules(), CostRules()


def toy_config(**kw):
    base = dict(param1=8, max_columns=4, cg_max_iters=200, cg_patience=200, learning_first=2,
                vgae=VgaeConfig(epochs=30))
    base.update(kw)
    return RunConfig(**base)


def full_lp(net):
    pool = enumerate_pairings(net, RULES, COST)
    return solve_lp(SetCoverInstance([p.flights for p in pool], [p.cost for p in pool], len(net))).cost


def test_initial_cover_without_artificials():
    net = toy_generated(0)
    cols = initial_solution(net, RULES, COST)
    assert not any(c.artificial for c in cols)
    assert {f for c in cols for f in c.flights} == set(range(len(net)))


def test_uncoverable_flight_gets_one_artificial():
    flights = [Flight(0, "A", "B", 480, 560), Flight(1, "B", "A", 620, 700), Flight(2, "C", "D", 800, 900)]
    cols = initial_solution(FlightNetwork(flights, ["A"]), RULES, COST)
    art = [c for c in cols if c.artificial]
    assert [c.flights for c in art] == [(2,)]
    assert art[0].cost == pytest.approx(10 * max(c.cost for c in cols if not c.artificial))


def test_overnight_only_flights_are_covered():
    # A-C one evening, C-A next morning: coverable only by a two-duty pairing
    flights = [Flight(0, "A", "C", 1000, 1100), Flight(1, "C", "A", 1440 + 480, 1440 + 590)]
    cols = initial_solution(FlightNetwork(flights, ["A"]), RULES, COST)
    assert [c.flights for c in cols] == [(0, 1)]


def test_equal_duals_reduce_to_seeded_random():
    duals = np.ones(40)
    a = baseline_pricing_subset(duals, 10, np.random.default_rng(1))
    b = baseline_pricing_subset(duals, 10, np.random.default_rng(1))
    c = baseline_pricing_subset(duals, 10, np.random.default_rng(2))
    assert a == b and len(a) == 10 and a != c


def test_dominant_dual_always_included():
    duals = np.zeros(40)
    duals[17] = 100.0
    for s in range(20):
        assert 17 in baseline_pricing_subset(duals, 6, np.random.default_rng(s))


def test_top_half_by_dual():
    duals = np.arange(40, dtype=float)
    subset = baseline_pricing_subset(duals, 10, np.random.default_rng(0))
    assert set(range(35, 40)) <= subset and len(subset) == 10
    assert len(baseline_pricing_subset(duals[:5], 10, np.random.default_rng(0))) == 5


def test_explicit_schedule():
    s = LearningSchedule(RunConfig(learning_schedule=[3, 5]))
    assert [t for t in range(1, 8) if s.is_learning(t)] == [3, 5]
    with pytest.raises(ValueError):
        RunConfig(learning_schedule=[5, 3])


def test_adaptive_schedule_tightens():
    s = LearningSchedule(RunConfig())
    assert s.is_learning(8) and not s.is_learning(7)
    flat = [100.0] * 9
    s.after_learning(8, flat)
    assert s.next_at == 12               # gap 8 -> 4
    s.after_learning(12, flat + [100.0] * 4)
    assert s.next_at == 14               # 4 -> 2
    s.after_learning(14, flat + [100.0] * 6)
    assert s.next_at == 16               # floor 2
    brisk = LearningSchedule(RunConfig())
    brisk.after_learning(8, list(np.linspace(200, 100, 9)))
    assert brisk.next_at == 16           # fast progress keeps the gap


def test_param1_checked_up_front():
    with pytest.raises(CombinerConfigError):
        Optimizer(toy_generated(0), RULES, COST, RunConfig(param1=12))


def test_single_iteration_when_start_is_optimal():
    # two trips too far apart to chain, plus one flight no pairing can fly
    net = FlightNetwork([Flight(0, "A", "X", 480, 560), Flight(1, "X", "A", 620, 700),
                         Flight(2, "A", "Y", 1000, 1100), Flight(3, "Y", "A", 1160, 1260),
                         Flight(4, "A", "Z", 1400, 1500)], ["A", "Z"])
    trace = run(net, RULES, COST, RunConfig(param1=2, learning_enabled=False))
    assert trace.loops[0].lp_z == 1
    assert trace.loops[0].lp_cost == pytest.approx(trace.initial_cost)


@pytest.mark.parametrize("learning", [False, True])
def test_toy_run_reaches_full_lp(learning):
    net = toy_generated(0)
    trace = run(net, RULES, COST, toy_config(learning_enabled=learning))
    assert trace.loops[0].lp_cost == pytest.approx(full_lp(net), rel=1e-6)
    for loop in trace.loops:
        costs = trace.cg_costs(loop.loop)
        assert all(b <= a + 1e-9 * abs(a) for a, b in zip(costs, costs[1:]))
        assert loop.ip_cost >= loop.root_lp - 1e-9 * abs(loop.root_lp)
    assert trace.final_artificial == 0
    if learning:
        assert any(r.learnt for r in trace.rows)
        assert trace.audits and trace.vgae_log


def test_paired_runs_share_start():
    net = toy_generated(1)
    a = run(net, RULES, COST, toy_config(learning_enabled=False))
    b = run(net, RULES, COST, toy_config(learning_enabled=True))
    assert a.initial_cost == b.initial_cost
    assert a.rows[0].cost == b.rows[0].cost


def test_learning_off_never_touches_the_learning_code(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("learning code ran")

    for name in ("train", "assemble_features", "make_record", "predict_negatives", "combine"):
        monkeypatch.setattr(orchestrator, name, boom)
    trace = run(toy_generated(2), RULES, COST, toy_config(learning_enabled=False))
    assert not any(r.learnt for r in trace.rows)


def test_runs_are_deterministic():
    net = toy_generated(3)
    a = run(net, RULES, COST, toy_config(seed=5))
    b = run(net, RULES, COST, toy_config(seed=5))
    assert [(r.iteration, r.cost, r.columns_added, r.roc) for r in a.rows] == \
        [(r.iteration, r.cost, r.columns_added, r.roc) for r in b.rows]


def test_integral_toy_stops_after_first_check():
    net = FlightNetwork([Flight(0, "A", "X", 480, 560), Flight(1, "X", "A", 620, 700),
                         Flight(2, "A", "Y", 800, 900), Flight(3, "Y", "A", 960, 1060)], ["A"])
    trace = run(net, RULES, COST, RunConfig(param1=1, learning_enabled=False, reopt_max_loops=3))
    assert len(trace.loops) == 1
    assert trace.final_cost == pytest.approx(trace.loops[0].lp_cost)


def test_rows_layout():
    trace = run(toy_generated(0), RULES, COST, toy_config())
    assert trace.rows[0].phase == "init" and trace.rows[0].iteration == 0
    assert trace.rows[-1].phase == "ip"
    cg = [r.iteration for r in trace.rows if r.phase == "cg"]
    assert cg == list(range(1, len(cg) + 1))
    assert trace.total_z == 1 + sum(l.lp_z + 1 for l in trace.loops)


def test_config_validation():
    for bad in (dict(cg_patience=0), dict(cg_rel_improvement=0), dict(reopt_max_loops=-1), dict(max_columns=0)):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_reopt_loop_runs_while_ip_gap_remains(monkeypatch):
    # force a gap on the first IP so the re-optimization loop has to run
    real, calls = orchestrator.solve_ip, []

    def gapped(inst, **kw):
        res = real(inst, **kw)
        calls.append(res.cost)
        return replace(res, cost=res.cost + 50.0) if len(calls) == 1 else res

    monkeypatch.setattr(orchestrator, "solve_ip", gapped)
    trace = run(toy_generated(0), RULES, COST, toy_config(learning_enabled=False, exact_pricing_fallback=False))
    assert len(trace.loops) == 2
    assert trace.loops[1].lp_cost <= trace.loops[0].lp_cost + 1e-9
    assert [r.loop for r in trace.rows if r.phase == "ip"] == [0, 1]
