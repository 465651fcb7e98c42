"""The optimizer loop: initial cover, column generation, integer phase, re-optimization.

A run is a main loop (CG then IP) followed by re-optimization loops that
restart CG from the incumbent integer solution, until the IP cost meets its
root LP cost or the loop budget runs out. When learning is enabled, scheduled
CG iterations replace the baseline pricing subset with one chosen from the
auto-encoder's non-edge predictions.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .combiner import CombinerConfig, combine
from .features import GlobalAdjacency, assemble_features, make_record, partition_edges, upper_pairs
from .lp import LpSolution, SetCoverInstance, greedy_cover, solve_ip, solve_lp
from .network import CostRules, FlightNetwork, LegalityRules, Pairing, connection_universe
from .pairings import PricingRequest, enumerate_pairings, price, price_pool
from .vgae import NotEnoughEdges, VgaeConfig, predict_negatives, train

log = logging.getLogger(__name__)

REL_TOL = 1e-6


@dataclass(frozen=True)
class Column:
    flights: tuple[int, ...]
    cost: float
    pairing: Pairing | None = None

    @property
    def artificial(self) -> bool:
        return self.pairing is None

    @property
    def key(self):
        return ("artificial", self.flights) if self.pairing is None else self.flights


@dataclass
class RunConfig:
    learning_enabled: bool = True
    learning_schedule: list[int] | None = None
    learning_first: int = 8
    learning_min_gap: int = 2
    learning_slowdown: float = 0.01
    cg_max_iters: int = 50
    cg_rel_improvement: float = 1e-4
    cg_patience: int = 8
    reopt_max_loops: int = 4
    param1: int = 45
    max_columns: int = 25
    reduced_cost_tolerance: float = -1e-6
    exact_pricing_fallback: bool = True
    fallback_limit: int = 200_000
    initial_enumeration_limit: int = 100_000
    initial_max_duties: int | None = 1
    ip_node_budget: int = 100_000
    ip_time_limit: float | None = 60.0
    reset_learning_history: bool = False
    restrict_negatives_to_universe: bool = False
    seed: int = 0
    vgae: VgaeConfig | None = None

    def __post_init__(self):
        if self.cg_rel_improvement <= 0 or self.learning_slowdown <= 0:
            raise ValueError("improvement thresholds must be positive")
        if self.cg_patience <= 0 or self.cg_max_iters <= 0 or self.max_columns <= 0:
            raise ValueError("patience, cg_max_iters and max_columns must be positive")
        if self.learning_schedule is not None:
            s = list(self.learning_schedule)
            if any(b <= a for a, b in zip(s, s[1:])):
                raise ValueError("learning_schedule must be strictly increasing")
        if self.reopt_max_loops < 0:
            raise ValueError("reopt_max_loops must be non-negative")


@dataclass
class IterationRow:
    iteration: int
    phase: str
    loop: int
    cost: float
    columns_added: int = 0
    learnt: bool = False
    roc: float | None = None


@dataclass
class LoopSummary:
    loop: int
    lp_cost: float
    lp_z: int
    ip_cost: float
    root_lp: float
    ip_proven: bool
    cg_seconds: float
    ip_seconds: float


@dataclass
class RunTrace:
    learning: bool
    initial_cost: float
    rows: list[IterationRow] = field(default_factory=list)
    loops: list[LoopSummary] = field(default_factory=list)
    audits: list[dict] = field(default_factory=list)
    vgae_log: list[tuple[int, int, float, float]] = field(default_factory=list)
    final_columns: list[tuple[int, ...]] = field(default_factory=list)
    final_artificial: int = 0
    wall_seconds: float = 0.0
    initial_seconds: float = 0.0

    @property
    def final_cost(self) -> float:
        return self.loops[-1].ip_cost if self.loops else self.initial_cost

    @property
    def total_z(self) -> int:
        return 1 + sum(l.lp_z + 1 for l in self.loops)

    def cg_costs(self, loop: int) -> list[float]:
        return [r.cost for r in self.rows if r.phase == "cg" and r.loop == loop]


class LearningSchedule:
    """Decides which global CG iterations are learning-iterations.

    Either an explicit index list, or adaptive: start at ``first`` with a gap
    of ``first``; after each learning-iteration the gap halves (down to
    ``min_gap``) if the LP cost improved by less than ``slowdown`` relative
    over the last gap.
    """

    def __init__(self, config: RunConfig):
        self.explicit = None if config.learning_schedule is None else set(config.learning_schedule)
        self.next_at = config.learning_first
        self.gap = config.learning_first
        self.min_gap = config.learning_min_gap
        self.slowdown = config.learning_slowdown

    def is_learning(self, t: int) -> bool:
        if self.explicit is not None:
            return t in self.explicit
        return t == self.next_at

    def after_learning(self, t: int, costs: Sequence[float]):
        if self.explicit is not None:
            return
        if len(costs) > self.gap:
            before, now = costs[-1 - self.gap], costs[-1]
            if before > 0 and (before - now) / before < self.slowdown:
                self.gap = max(self.min_gap, self.gap // 2)
        self.next_at = t + self.gap


def _greedy_over(pool: list[Pairing], flights: set[int]) -> list[int]:
    """Greedy cover of ``flights`` by pool members, each charged its full cost."""
    index = {f: k for k, f in enumerate(sorted(flights))}
    cols, keep = [], []
    for j, p in enumerate(pool):
        part = tuple(index[f] for f in p.flights if f in index)
        if part:
            cols.append(part)
            keep.append(j)
    if not index:
        return []
    sub = SetCoverInstance(cols, np.array([pool[j].cost for j in keep]), len(index))
    return [keep[k] for k in greedy_cover(sub) or []]


def initial_solution(network: FlightNetwork, rules: LegalityRules, cost: CostRules,
                     limit: int | None = 100_000, max_duties: int | None = 1) -> list[Column]:
    """A feasible start: greedy covers over enumerated pairings, then artificial columns.

    Flights reachable by pairings of at most ``max_duties`` duties (day
    trips by default) are covered from those first, which leaves the column
    generation something to improve; any other coverable flight is covered
    by a second greedy over all pairings. A flight on no legal pairing gets
    a single-flight artificial column priced at ten times the dearest pairing.
    """
    pool = enumerate_pairings(network, rules, cost, limit=limit)
    short = pool if max_duties is None else [p for p in pool if len(p.duties) <= max_duties]
    chosen: list[Column] = []
    covered: set[int] = set()
    for candidates in (short, pool):
        reach = {f for p in candidates for f in p.flights} - covered
        for j in _greedy_over(candidates, reach):
            p = candidates[j]
            if not covered.issuperset(p.flights):
                chosen.append(Column(p.flights, p.cost, p))
                covered.update(p.flights)
    big_m = 10.0 * max((p.cost for p in pool), default=1.0)
    for f in range(len(network)):
        if f not in covered:
            chosen.append(Column((f,), big_m))
    return chosen


def baseline_pricing_subset(duals: np.ndarray, size: int, rng: np.random.Generator) -> frozenset[int]:
    """The ceil(size/2) highest-dual flights plus a uniform draw for the rest.

    Flights tied at the cut-off dual value are drawn at random among
    themselves, so equal duals reduce to a seeded random subset.
    """
    duals = np.asarray(duals, dtype=float)
    n = len(duals)
    size = min(size, n)
    top = math.ceil(size / 2)
    picked: list[int] = []
    if top:
        cut = np.sort(duals)[::-1][top - 1]
        picked = np.flatnonzero(duals > cut).tolist()
        tied = np.flatnonzero(duals == cut)
        picked += rng.choice(tied, size=top - len(picked), replace=False).tolist()
    rest = np.setdiff1d(np.arange(n), picked)
    picked += rng.choice(rest, size=size - len(picked), replace=False).tolist()
    return frozenset(int(f) for f in picked)


class Optimizer:
    def __init__(self, network: FlightNetwork, rules: LegalityRules, cost: CostRules, config: RunConfig):
        self.network = network
        self.rules = rules
        self.cost = cost
        self.config = config
        self.n = len(network)
        self._full_pool: list[Pairing] | None = None
        self._universe: set[tuple[int, int]] | None = None
        self.records = []
        self.adjacency_union: np.ndarray | None = None
        self.lp_costs: list[float] = []
        self.t = 0
        self.schedule = LearningSchedule(config)
        # both arms share the subset size, so reject a bad one up front
        CombinerConfig(config.param1, config.seed).validate(self.n)

    def full_pool(self) -> list[Pairing]:
        if self._full_pool is None:
            self._full_pool = enumerate_pairings(self.network, self.rules, self.cost,
                                                 limit=self.config.fallback_limit)
            if len(self._full_pool) >= self.config.fallback_limit:
                log.warning("full pairing pool truncated at %d; fallback pricing is not exact",
                            self.config.fallback_limit)
        return self._full_pool

    def universe(self) -> set[tuple[int, int]]:
        if self._universe is None:
            self._universe = connection_universe(self.network, self.rules)
        return self._universe

    def _instance(self, columns: Sequence[Column]) -> SetCoverInstance:
        return SetCoverInstance([c.flights for c in columns], np.array([c.cost for c in columns]), self.n)

    def _subset_pricing(self, subset: frozenset[int], duals: np.ndarray, exclude) -> list[Pairing]:
        req = PricingRequest(subset, duals, self.config.max_columns, self.config.reduced_cost_tolerance)
        return price(req, self.network, self.rules, self.cost, exclude=exclude)

    def _learnt_pricing(self, lp: LpSolution, exclude, trace: RunTrace):
        cfg = self.config
        g = GlobalAdjacency(self.adjacency_union.copy(), len(self.records))
        feats = assemble_features(self.records)
        domain = sorted(self.universe()) if cfg.restrict_negatives_to_universe else upper_pairs(self.n)
        vcfg = cfg.vgae or VgaeConfig()
        vcfg = replace(vcfg, seed=vcfg.seed + self.t)
        model, split = train(vcfg, g.matrix, feats.matrix, domain)
        for epoch, loss_value, roc in model.history:
            trace.vgae_log.append((self.t, epoch, loss_value, roc))
        _, negatives = partition_edges(g, domain)
        preds = predict_negatives(model, negatives)
        ccfg = CombinerConfig(cfg.param1, seed=cfg.seed * 100_003 + self.t)
        outcome = combine(preds, model.roc, self.n, lp.duals, ccfg,
                          lambda sub, y: self._subset_pricing(sub, y, exclude))
        audit = {"iteration": self.t, "roc": model.roc, "epochs": model.epochs_run}
        audit.update(outcome.audit())
        trace.audits.append(audit)
        return outcome.pairings, model.roc

    def _record(self, lp: LpSolution):
        prev = self.lp_costs[-2] if len(self.lp_costs) > 1 else None
        rec = make_record(lp, self.n, prev)
        self.records.append(rec)
        if self.adjacency_union is None:
            self.adjacency_union = rec.adjacency.copy()
        else:
            self.adjacency_union = np.maximum(self.adjacency_union, rec.adjacency)

    def cg_phase(self, columns: list[Column], loop: int,
                 trace: RunTrace) -> tuple[LpSolution, list[Column], int, bool]:
        """Run CG on ``columns``; returns (final LP, grown RMP, z, exhausted).

        ``exhausted`` means the last pricing round found nothing, so another
        phase on the same pool cannot move the LP.
        """
        cfg = self.config
        rmp = list(columns)
        keys = {c.key for c in rmp}
        phase_costs: list[float] = []
        stall = 0
        z = 0
        exhausted = False
        while True:
            lp = solve_lp(self._instance(rmp))
            if not lp.optimal:
                raise RuntimeError(f"restricted master problem became {lp.status}")
            z += 1
            self.t += 1
            self.lp_costs.append(lp.cost)
            row = IterationRow(self.t, "cg", loop, lp.cost)
            trace.rows.append(row)
            # while artificial columns still carry flow the LP is not yet a
            # meaningful bound, so flat steps there do not count as a stall
            artificial_active = any(rmp[j].artificial for j in lp.support())
            if phase_costs and not artificial_active:
                prev = phase_costs[-1]
                stall = stall + 1 if (prev - lp.cost) / max(abs(prev), 1e-12) < cfg.cg_rel_improvement else 0
            phase_costs.append(lp.cost)
            if cfg.learning_enabled:
                self._record(lp)
            if z >= cfg.cg_max_iters or stall >= cfg.cg_patience:
                break

            exclude = {c.flights for c in rmp if not c.artificial}
            new: list[Pairing] = []
            if cfg.learning_enabled and self.schedule.is_learning(self.t):
                try:
                    new, row.roc = self._learnt_pricing(lp, exclude, trace)
                    row.learnt = True
                except NotEnoughEdges as exc:
                    log.info("learning skipped at iteration %d: %s", self.t, exc)
                self.schedule.after_learning(self.t, self.lp_costs)
            if not row.learnt:
                rng = np.random.default_rng([cfg.seed, self.t])
                subset = baseline_pricing_subset(lp.duals, cfg.param1, rng)
                new = self._subset_pricing(subset, lp.duals, exclude)
            if not new and cfg.exact_pricing_fallback:
                new = price_pool(self.full_pool(), lp.duals, cfg.max_columns,
                                 cfg.reduced_cost_tolerance, exclude)
            if not new:
                exhausted = True
                break
            for p in new:
                col = Column(p.flights, p.cost, p)
                if col.key not in keys:
                    keys.add(col.key)
                    rmp.append(col)
                    row.columns_added += 1
        return lp, rmp, z, exhausted

    def run(self) -> RunTrace:
        cfg = self.config
        t_start = time.perf_counter()
        init = initial_solution(self.network, self.rules, self.cost, cfg.initial_enumeration_limit,
                                cfg.initial_max_duties)
        init_cost = float(sum(c.cost for c in init))
        trace = RunTrace(cfg.learning_enabled, init_cost)
        trace.initial_seconds = time.perf_counter() - t_start
        trace.rows.append(IterationRow(0, "init", 0, init_cost))
        log.info("initial solution: %d columns (%d artificial), cost %.2f",
                 len(init), sum(c.artificial for c in init), init_cost)

        columns = init
        for loop in range(cfg.reopt_max_loops + 1):
            if loop > 0 and cfg.reset_learning_history:
                self.records, self.adjacency_union = [], None
            t0 = time.perf_counter()
            lp, rmp, z, exhausted = self.cg_phase(columns, loop, trace)
            t1 = time.perf_counter()
            ip = solve_ip(self._instance(rmp), cutoff=cfg.ip_node_budget, time_limit=cfg.ip_time_limit)
            t2 = time.perf_counter()
            trace.rows.append(IterationRow(self.t, "ip", loop, ip.cost))
            trace.loops.append(LoopSummary(loop, lp.cost, z, ip.cost, lp.cost, ip.proven, t1 - t0, t2 - t1))
            log.info("loop %d: LP %.2f in %d iterations, IP %.2f (%s)", loop, lp.cost, z, ip.cost,
                     "proven" if ip.proven else "node budget hit")
            chosen = [rmp[j] for j in ip.selected]
            trace.final_columns = [c.flights for c in chosen]
            trace.final_artificial = sum(c.artificial for c in chosen)
            # the next loop restarts from the whole column pool, which holds the incumbent
            columns = rmp
            if abs(ip.cost - lp.cost) <= REL_TOL * max(1.0, abs(lp.cost)):
                break
            if exhausted and cfg.exact_pricing_fallback:
                log.info("pricing is exhausted; re-optimization cannot improve the LP")
                break
        trace.wall_seconds = time.perf_counter() - t_start
        return trace


def run(network: FlightNetwork, rules: LegalityRules, cost: CostRules, config: RunConfig) -> RunTrace:
    return Optimizer(network, rules, cost, config).run()
