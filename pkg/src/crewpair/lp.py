"""Set-covering LP and IP solvers.

The LP  min c'x  s.t.  Ax >= 1, x >= 0  is put in standard form with surplus
variables, ``[A  -I] [x; s] = 1``. The all-surplus basis is dual feasible
whenever c >= 0, so a dual simplex started there needs no phase one. The
basis inverse is kept dense and updated in product form, refactorised every
``REFACTOR_EVERY`` pivots.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
OPT_TOL = 1e-6
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 50
DEGENERATE_LIMIT = 50


class LPError(RuntimeError):
    """Numerical failure inside the simplex (iteration cap, singular basis)."""


class InfeasibleError(ValueError):
    pass


@dataclass
class SetCoverInstance:
    columns: list[tuple[int, ...]]
    costs: np.ndarray
    num_flights: int

    def __post_init__(self):
        self.columns = [tuple(c) for c in self.columns]
        self.costs = np.asarray(self.costs, dtype=float)
        if len(self.columns) != len(self.costs):
            raise ValueError("one cost per column required")
        if np.any(self.costs < 0):
            raise ValueError("column costs must be non-negative")
        for col in self.columns:
            if any(f < 0 or f >= self.num_flights for f in col):
                raise ValueError(f"column {col} references an unknown flight")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[Sequence[int], float]], num_flights: int) -> "SetCoverInstance":
        return cls([tuple(p[0]) for p in pairs], np.array([p[1] for p in pairs], dtype=float), num_flights)

    def matrix(self) -> np.ndarray:
        A = np.zeros((self.num_flights, len(self.columns)))
        for j, col in enumerate(self.columns):
            A[list(set(col)), j] = 1.0
        return A

    @property
    def feasible(self) -> bool:
        covered = set()
        for col in self.columns:
            covered.update(col)
        return len(covered) == self.num_flights


@dataclass
class LpSolution:
    columns: list[tuple[int, ...]]
    costs: np.ndarray
    primal: np.ndarray
    duals: np.ndarray
    cost: float
    status: str = "optimal"
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def support(self, eps: float = 1e-9) -> list[int]:
        return [j for j, v in enumerate(self.primal) if v > eps]


@dataclass
class IpResult:
    selected: list[int]
    cost: float
    proven: bool
    nodes: int
    root_lp: float
    columns: list[tuple[int, ...]] = field(default_factory=list)


class _DualSimplex:
    def __init__(self, A: np.ndarray, c: np.ndarray):
        m, n = A.shape
        self.m, self.n = m, n
        self.M = np.hstack([A, -np.eye(m)])
        self.c = np.concatenate([c, np.zeros(m)])
        self.b = np.ones(m)
        self.scale = max(1.0, float(np.max(np.abs(c))) if n else 1.0)
        self.basis = np.arange(n, n + m)
        self.Binv = -np.eye(m)
        self.iterations = 0

    def _refactor(self):
        try:
            self.Binv = np.linalg.inv(self.M[:, self.basis])
        except np.linalg.LinAlgError:
            raise LPError("singular basis") from None

    def _duals(self) -> np.ndarray:
        return self.c[self.basis] @ self.Binv

    def _reduced(self, y: np.ndarray) -> np.ndarray:
        d = self.c - y @ self.M
        d[self.basis] = 0.0
        return d

    def _pivot(self, r: int, q: int, col: np.ndarray):
        piv = col[r]
        if abs(piv) < PIVOT_TOL:
            raise LPError("pivot element vanished")
        row = self.Binv[r] / piv
        self.Binv -= np.outer(col, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.iterations += 1
        if self.iterations % REFACTOR_EVERY == 0:
            self._refactor()

    def solve(self, max_iter: int) -> str:
        nonbasic = np.ones(self.n + self.m, dtype=bool)
        nonbasic[self.basis] = False
        y = self._duals()
        d = self._reduced(y)
        degenerate = 0
        while True:
            if self.iterations > max_iter:
                raise LPError(f"dual simplex exceeded {max_iter} iterations")
            xB = self.Binv @ self.b
            bad = np.flatnonzero(xB < -FEAS_TOL)
            if bad.size == 0:
                break
            bland = degenerate > DEGENERATE_LIMIT
            if bland:
                r = int(bad[np.argmin(self.basis[bad])])
            else:
                r = int(bad[np.argmin(xB[bad])])
            alpha = self.Binv[r] @ self.M
            cand = np.flatnonzero(nonbasic & (alpha < -PIVOT_TOL))
            if cand.size == 0:
                return "infeasible"
            dj = np.maximum(d[cand], 0.0)
            ratios = dj / -alpha[cand]
            if bland:
                best = ratios.min()
                ties = cand[ratios <= best + 1e-12]
                q = int(ties.min())
            else:
                # Harris two-pass: widen by the optimality tolerance, then take the largest pivot
                bound = np.min((dj + OPT_TOL * self.scale) / -alpha[cand])
                ok = ratios <= bound
                q = int(cand[ok][np.argmax(-alpha[cand][ok])])
            step = max(d[q], 0.0) / -alpha[q]
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            col = self.Binv @ self.M[:, q]
            leaving = self.basis[r]
            self._pivot(r, q, col)
            nonbasic[q] = False
            nonbasic[leaving] = True
            if self.iterations % REFACTOR_EVERY == 0:
                d = self._reduced(self._duals())
            else:
                d = d + step * alpha
                d[self.basis] = 0.0
        return "optimal"

    def primal_cleanup(self, max_iter: int):
        """Primal simplex from a feasible basis; repairs dual infeasibility left by drift."""
        degenerate = 0
        while True:
            self._refactor()
            y = self._duals()
            d = self._reduced(y)
            cand = np.flatnonzero(d < -OPT_TOL * self.scale)
            if cand.size == 0:
                return
            if self.iterations > max_iter:
                raise LPError("primal cleanup exceeded iteration cap")
            q = int(cand.min()) if degenerate > DEGENERATE_LIMIT else int(cand[np.argmin(d[cand])])
            col = self.Binv @ self.M[:, q]
            xB = np.maximum(self.Binv @ self.b, 0.0)
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                raise LPError("unbounded direction in a covering LP")
            ratios = xB[pos] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12]
            r = int(ties[np.argmin(self.basis[ties])])
            degenerate = degenerate + 1 if best <= 1e-12 else 0
            self._pivot(r, q, col)


def solve_lp(instance: SetCoverInstance, max_iter: int | None = None) -> LpSolution:
    """Optimal primal and dual solution of the covering LP relaxation."""
    m, n = instance.num_flights, len(instance.columns)
    c = instance.costs
    if not instance.feasible:
        return LpSolution(instance.columns, c, np.zeros(n), np.zeros(m), float("inf"), status="infeasible")
    if m == 0:
        return LpSolution(instance.columns, c, np.zeros(n), np.zeros(0), 0.0)
    ds = _DualSimplex(instance.matrix(), c)
    cap = max_iter if max_iter is not None else 50 * (m + n) + 1000
    status = ds.solve(cap)
    if status == "infeasible":
        return LpSolution(instance.columns, c, np.zeros(n), np.zeros(m), float("inf"),
                          status="infeasible", iterations=ds.iterations)
    ds._refactor()
    xB = ds.Binv @ ds.b
    if np.any(xB < -FEAS_TOL * 10):
        raise LPError("lost primal feasibility after refactorisation")
    ds.primal_cleanup(cap + ds.iterations)
    xB = ds.Binv @ ds.b
    z = np.zeros(n + m)
    z[ds.basis] = np.maximum(xB, 0.0)
    x = np.clip(z[:n], 0.0, 1.0)
    y = np.maximum(ds._duals(), 0.0)
    return LpSolution(instance.columns, c, x, y, float(c @ x), iterations=ds.iterations)


def greedy_cover(instance: SetCoverInstance, candidates: Sequence[int] | None = None,
                 fixed: Sequence[int] = (), priority: np.ndarray | None = None,
                 matrix: np.ndarray | None = None) -> list[int] | None:
    """Cheapest-per-new-flight greedy cover, followed by redundancy removal.

    ``priority`` (higher first) breaks ratio ties, which lets LP rounding
    prefer columns with large primal value. Returns None when the candidates
    cannot cover every flight.
    """
    A = (instance.matrix() if matrix is None else matrix) > 0
    n = A.shape[1]
    pool = np.arange(n) if candidates is None else np.asarray(sorted(set(candidates)), dtype=int)
    chosen = list(dict.fromkeys(fixed))
    covered = A[:, chosen].any(axis=1) if chosen else np.zeros(A.shape[0], dtype=bool)
    costs = instance.costs
    tie = np.zeros(n) if priority is None else np.asarray(priority, dtype=float)
    while not covered.all():
        if pool.size == 0:
            return None
        new = A[~covered][:, pool].sum(axis=0)
        ok = new > 0
        if not ok.any():
            return None
        cand = pool[ok]
        ratio = costs[cand] / new[ok]
        # lexsort: last key is primary
        best = cand[np.lexsort((cand, -tie[cand], ratio))[0]]
        chosen.append(int(best))
        covered |= A[:, best]
    fixed_set = set(fixed)
    for j in sorted(set(chosen) - fixed_set, key=lambda k: (-costs[k], k)):
        others = [k for k in chosen if k != j]
        if others and A[:, others].any(axis=1).all():
            chosen.remove(j)
    return sorted(set(chosen))


def _round(sol: LpSolution, instance: SetCoverInstance, fixed: list[int], allowed: list[int],
           matrix: np.ndarray) -> list[int] | None:
    priority = np.zeros(len(instance.columns))
    priority[allowed] = sol.primal
    # columns at one in the LP go first, the rest is greedy
    ones = [j for j, v in zip(allowed, sol.primal) if v >= 1 - FEAS_TOL]
    return greedy_cover(instance, allowed, list(fixed) + ones, priority=priority, matrix=matrix)


def solve_ip(instance: SetCoverInstance, cutoff: int = 100_000,
             time_limit: float | None = None) -> IpResult:
    """Best-first branch-and-bound on the most fractional column.

    Each node fixes some columns to one and others to zero; its LP is the
    covering LP over the flights the fixed-one columns leave uncovered.
    """
    if not instance.feasible:
        raise InfeasibleError("some flight is not covered by any column")
    n = len(instance.columns)
    sets = [frozenset(col) for col in instance.columns]
    scale = max(1.0, float(np.max(instance.costs)) if n else 1.0)
    t0 = time.perf_counter()

    matrix = instance.matrix()
    incumbent = greedy_cover(instance, matrix=matrix)
    best_cost = float(instance.costs[incumbent].sum())

    def node_lp(ones: frozenset[int], zeros: frozenset[int]):
        covered = set()
        for j in ones:
            covered |= sets[j]
        rows = [f for f in range(instance.num_flights) if f not in covered]
        allowed = [j for j in range(n) if j not in ones and j not in zeros]
        fixed_cost = float(instance.costs[list(ones)].sum()) if ones else 0.0
        if not rows:
            return fixed_cost, None, allowed, rows
        index = {f: k for k, f in enumerate(rows)}
        cols = [tuple(index[f] for f in sets[j] if f in index) for j in allowed]
        keep = [k for k, col in enumerate(cols) if col]
        allowed = [allowed[k] for k in keep]
        sub = SetCoverInstance([cols[k] for k in keep], instance.costs[allowed], len(rows))
        sol = solve_lp(sub)
        if not sol.optimal:
            return float("inf"), None, allowed, rows
        return fixed_cost + sol.cost, sol, allowed, rows

    root_bound, root_sol, root_allowed, _ = node_lp(frozenset(), frozenset())
    nodes = 1
    counter = 0
    heap = [(root_bound, 0, counter, frozenset(), frozenset(), root_sol, root_allowed)]
    proven = True
    while heap:
        bound, depth, _, ones, zeros, sol, allowed = heapq.heappop(heap)
        if bound >= best_cost - 1e-9 * scale:
            continue
        if sol is None:
            # every flight covered by fixed-one columns
            best_cost, incumbent = bound, sorted(ones)
            continue
        rounded = _round(sol, instance, sorted(ones), allowed, matrix)
        if rounded is not None:
            rc = float(instance.costs[rounded].sum())
            if rc < best_cost - 1e-9 * scale:
                best_cost, incumbent = rc, rounded
        frac = np.abs(sol.primal - 0.5)
        k = int(np.argmin(frac))
        if sol.primal[k] <= FEAS_TOL or sol.primal[k] >= 1 - FEAS_TOL:
            chosen = sorted(set(ones) | {allowed[i] for i, v in enumerate(sol.primal) if v > 0.5})
            cost = float(instance.costs[chosen].sum())
            if cost < best_cost - 1e-9 * scale:
                best_cost, incumbent = cost, chosen
            continue
        if bound >= best_cost - 1e-9 * scale:
            continue
        j = allowed[k]
        for child_ones, child_zeros in ((ones | {j}, zeros), (ones, zeros | {j})):
            if nodes >= cutoff or (time_limit is not None and time.perf_counter() - t0 > time_limit):
                proven = False
                break
            cb, cs, ca, _ = node_lp(child_ones, child_zeros)
            nodes += 1
            if cb < best_cost - 1e-9 * scale:
                counter += 1
                heapq.heappush(heap, (cb, -(depth + 1), counter, child_ones, child_zeros, cs, ca))
        if not proven:
            break
    if proven is False:
        log.info("branch-and-bound stopped after %d nodes; incumbent not proven optimal", nodes)
    return IpResult(sorted(incumbent), best_cost, proven, nodes, root_bound,
                    [instance.columns[j] for j in sorted(incumbent)])


def dump_instance(instance: SetCoverInstance, path: str | Path):
    """Write ``cost flight flight ...`` rows under a ``num_flights`` header."""
    lines = [f"num_flights {instance.num_flights}"]
    for col, c in zip(instance.columns, instance.costs):
        lines.append(" ".join([repr(float(c))] + [str(f) for f in col]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path: str | Path) -> SetCoverInstance:
    rows = Path(path).read_text().split("\n")
    head = rows[0].split()
    if len(head) != 2 or head[0] != "num_flights":
        raise ValueError(f"{path}: missing num_flights header")
    cols, costs = [], []
    for line in rows[1:]:
        if not line.strip():
            continue
        parts = line.split()
        costs.append(float(parts[0]))
        cols.append(tuple(int(p) for p in parts[1:]))
    return SetCoverInstance(cols, np.array(costs), int(head[1]))
