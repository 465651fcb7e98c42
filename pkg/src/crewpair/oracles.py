"""Brute-force reference computations.

Each routine here re-derives a result by exhaustive search and shares no code
path with the solver it checks: LP optima come from enumerating basic
solutions, IP optima from enumerating column subsets, pairings from filtering
every increasing flight sequence with a separately written rule checker.
They are exponential and meant for instances of a dozen or two elements.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

import numpy as np

from .lp import SetCoverInstance
from .network import CostRules, FlightNetwork, LegalityRules


def lp_vertex_optimum(instance: SetCoverInstance, batch: int = 200_000) -> float:
    """Minimum of c'x over Ax >= 1, x >= 0 by enumerating every basis of [A -I]."""
    A = instance.matrix()
    m, n = A.shape
    M = np.hstack([A, -np.eye(m)])
    c = np.concatenate([instance.costs, np.zeros(m)])
    best = np.inf
    combos = combinations(range(n + m), m)
    while True:
        chunk = np.array([b for _, b in zip(range(batch), combos)], dtype=int)
        if chunk.size == 0:
            break
        B = M[:, chunk].transpose(1, 0, 2)
        det = np.linalg.det(B)
        ok = np.abs(det) > 1e-9
        if ok.any():
            xb = np.linalg.solve(B[ok], np.ones((ok.sum(), m, 1)))[..., 0]
            feas = np.all(xb >= -1e-9, axis=1)
            if feas.any():
                vals = np.einsum("kj,kj->k", c[chunk[ok][feas]], xb[feas])
                best = min(best, float(vals.min()))
        if len(chunk) < batch:
            break
    return best


def ip_subset_optimum(instance: SetCoverInstance) -> tuple[float, tuple[int, ...]]:
    """Cheapest covering column subset over all 2^n subsets."""
    n = len(instance.columns)
    if n > 24:
        raise ValueError("subset oracle limited to 24 columns")
    masks = np.array([sum(1 << f for f in set(col)) for col in instance.columns], dtype=np.int64)
    cover = np.zeros(1, dtype=np.int64)
    cost = np.zeros(1)
    for j in range(n):
        cover = np.concatenate([cover, cover | masks[j]])
        cost = np.concatenate([cost, cost + instance.costs[j]])
    full = (1 << instance.num_flights) - 1
    feasible = np.flatnonzero(cover == full)
    if feasible.size == 0:
        return float("inf"), ()
    k = feasible[np.argmin(cost[feasible])]
    chosen = tuple(j for j in range(n) if (int(k) >> j) & 1)
    return float(cost[k]), chosen


def connections_double_loop(network: FlightNetwork, rules: LegalityRules) -> set[tuple[int, int]]:
    out = set()
    fl = network.flights
    for i in range(len(fl)):
        for j in range(len(fl)):
            if i >= j or fl[i].destination != fl[j].origin:
                continue
            gap = fl[j].dep_time - fl[i].arr_time
            if rules.sit_min <= gap <= rules.sit_max or rules.rest_min <= gap <= rules.rest_max:
                out.add((i, j))
    return out


def sequence_verdict(network: FlightNetwork, rules: LegalityRules, seq: tuple[int, ...],
                     base: str) -> list[str]:
    """Rule-by-rule legality of a flight sequence flown from ``base``; empty list means legal."""
    fl = network.flights
    bad = []
    if fl[seq[0]].origin != base:
        bad.append("base-start")
    if fl[seq[-1]].destination != base:
        bad.append("base-return")
    duties = [[seq[0]]]
    for k in range(1, len(seq)):
        a, b = fl[seq[k - 1]], fl[seq[k]]
        if a.destination != b.origin:
            bad.append("continuity")
        gap = b.dep_time - a.arr_time
        if rules.sit_min <= gap <= rules.sit_max:
            duties[-1].append(seq[k])
        elif rules.rest_min <= gap <= rules.rest_max:
            duties.append([seq[k]])
        else:
            bad.append("gap")
            duties.append([seq[k]])
    for d in duties:
        if len(d) > rules.duty_max_flights:
            bad.append("duty-flights")
        if sum(fl[f].arr_time - fl[f].dep_time for f in d) > rules.duty_max_flying:
            bad.append("duty-flying")
        if fl[d[-1]].arr_time - fl[d[0]].dep_time + rules.brief + rules.debrief > rules.duty_max_elapsed:
            bad.append("duty-elapsed")
    if len(duties) > rules.pairing_max_duties:
        bad.append("pairing-duties")
    tafb = fl[seq[-1]].arr_time + rules.debrief - (fl[seq[0]].dep_time - rules.brief)
    if tafb > rules.tafb_max:
        bad.append("tafb")
    return bad


def sequence_cost(network: FlightNetwork, rules: LegalityRules, cost: CostRules, seq: tuple[int, ...]) -> float:
    """Term-wise cost accumulation for a legal flight sequence."""
    fl = network.flights
    total = 0.0
    n_duties = 1
    for k, f in enumerate(seq):
        total += cost.rate_flying * (fl[f].arr_time - fl[f].dep_time)
        if k and fl[f].dep_time - fl[seq[k - 1]].arr_time > rules.sit_max:
            n_duties += 1
    tafb = fl[seq[-1]].arr_time + rules.debrief - (fl[seq[0]].dep_time - rules.brief)
    total += cost.rate_tafb * tafb
    total += cost.hotel_cost * (n_duties - 1)
    total += cost.fixed_cost * n_duties
    return total


def pairings_by_filtering(network: FlightNetwork, rules: LegalityRules, cost: CostRules,
                          flight_subset: Iterable[int] | None = None,
                          bases: Iterable[str] | None = None) -> dict[tuple[int, ...], float]:
    """Every legal pairing over the subset, found by testing all increasing flight sequences."""
    pool = sorted(set(range(len(network))) if flight_subset is None else set(flight_subset))
    if len(pool) > 20:
        raise ValueError("sequence oracle limited to 20 flights")
    base_set = set(network.base_airports if bases is None else bases)
    longest = rules.pairing_max_duties * rules.duty_max_flights
    out = {}
    for k in range(1, min(len(pool), longest) + 1):
        for seq in combinations(pool, k):
            base = network.flights[seq[0]].origin
            if base not in base_set:
                continue
            if not sequence_verdict(network, rules, seq, base):
                out[seq] = sequence_cost(network, rules, cost, seq)
    return out


def roc_pairwise(pos_scores, neg_scores) -> float:
    """AUC as the fraction of (positive, negative) pairs ranked correctly, ties counting half."""
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def feature_blocks_by_loops(history, num_flights: int, eps: float = 1e-9):
    """Unnormalized (A_union, X, Y, I, O) from a list of LP solutions, element by element.

    Works from the raw columns and primal values, with explicit loops over
    every (iteration, pairing, connection).
    """
    n = num_flights
    t = len(history)
    union = [[0.0] * n for _ in range(n)]
    X = [[0.0] * n for _ in range(n)]
    Y = [[0.0] * t for _ in range(n)]
    I = [0.0] * n
    O = [0.0] * n
    prev = None
    for k, lp in enumerate(history):
        cr = 1.0 if prev is None else prev / lp.cost
        prev = lp.cost
        for f in range(n):
            Y[f][k] = cr / lp.cost * float(lp.duals[f])
        weight = {}
        for col, x in zip(lp.columns, lp.primal):
            if x <= eps:
                continue
            for a, b in zip(col[:-1], col[1:]):
                weight[(a, b)] = weight.get((a, b), 0.0) + float(x)
        for (a, b), w in weight.items():
            union[a][b] = 1.0
            X[a][b] += cr * w
            I[b] += cr * w
            O[a] += cr * w
    return (np.array(union), np.array(X), np.array(Y).reshape(n, t),
            np.array(I).reshape(n, 1), np.array(O).reshape(n, 1))


def minmax_by_scan(block: np.ndarray) -> np.ndarray:
    flat = [float(v) for v in np.ravel(block)]
    if not flat:
        return np.asarray(block, dtype=float)
    lo, hi = min(flat), max(flat)
    if hi == lo:
        return np.zeros(np.shape(block))
    return np.array([(v - lo) / (hi - lo) for v in flat]).reshape(np.shape(block))
