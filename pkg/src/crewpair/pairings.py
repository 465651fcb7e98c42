"""Duty and pairing enumeration over a flight subset, and column pricing."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .network import CostRules, Duty, FlightNetwork, LegalityRules, Pairing, CrewBase, pairing_cost

DualVector = np.ndarray


@dataclass(frozen=True)
class PricingRequest:
    flight_subset: frozenset[int]
    duals: DualVector
    max_columns: int = 20
    reduced_cost_tolerance: float = -1e-6

    def __post_init__(self):
        if self.max_columns <= 0:
            raise ValueError("max_columns must be positive")
        object.__setattr__(self, "flight_subset", frozenset(self.flight_subset))


class _Successors:
    """Sit and rest successor lists for every flight, sorted by flight id."""

    def __init__(self, network: FlightNetwork, rules: LegalityRules):
        by_origin: dict[str, list[int]] = {}
        for f in network:
            by_origin.setdefault(f.origin, []).append(f.id)
        self.sit: list[list[int]] = []
        self.rest: list[list[int]] = []
        for f in network:
            sit, rest = [], []
            for j in by_origin.get(f.destination, ()):
                if j <= f.id:
                    continue
                gap = network[j].dep_time - f.arr_time
                if rules.is_sit(gap):
                    sit.append(j)
                elif rules.is_rest(gap):
                    rest.append(j)
            self.sit.append(sit)
            self.rest.append(rest)


_succ_cache: dict[tuple[int, LegalityRules], tuple[FlightNetwork, _Successors]] = {}


def _successors(network: FlightNetwork, rules: LegalityRules) -> _Successors:
    key = (id(network), rules)
    hit = _succ_cache.get(key)
    if hit is None or hit[0] is not network:
        if len(_succ_cache) > 32:
            _succ_cache.clear()
        hit = (network, _Successors(network, rules))
        _succ_cache[key] = hit
    return hit[1]


def _resolve_subset(network: FlightNetwork, flight_subset: Iterable[int] | None) -> frozenset[int]:
    if flight_subset is None:
        return frozenset(range(len(network)))
    return frozenset(flight_subset)


def iter_duties(network: FlightNetwork, rules: LegalityRules,
                flight_subset: Iterable[int] | None = None) -> Iterator[Duty]:
    """Depth-first generation of legal duties inside ``flight_subset``.

    Every prefix of a legal duty is itself legal, so each visited node is
    emitted and a branch is cut as soon as a limit is broken.
    """
    subset = _resolve_subset(network, flight_subset)
    succ = _successors(network, rules)
    flights = network.flights

    def extend(seq: list[int], flying: int) -> Iterator[Duty]:
        first = flights[seq[0]]
        yield Duty(tuple(seq), first.dep_time - rules.brief,
                   flights[seq[-1]].arr_time + rules.debrief, flying)
        if len(seq) >= rules.duty_max_flights:
            return
        for j in succ.sit[seq[-1]]:
            if j not in subset:
                continue
            fj = flights[j]
            fly = flying + fj.block
            if fly > rules.duty_max_flying:
                continue
            if fj.arr_time + rules.debrief - (first.dep_time - rules.brief) > rules.duty_max_elapsed:
                continue
            seq.append(j)
            yield from extend(seq, fly)
            seq.pop()

    for i in sorted(subset):
        f = flights[i]
        if f.block > rules.duty_max_flying or f.block + rules.brief + rules.debrief > rules.duty_max_elapsed:
            continue
        yield from extend([i], f.block)


def enumerate_duties(network: FlightNetwork, rules: LegalityRules,
                     flight_subset: Iterable[int] | None = None) -> list[Duty]:
    return list(iter_duties(network, rules, flight_subset))


def iter_pairings(network: FlightNetwork, rules: LegalityRules, cost: CostRules,
                  flight_subset: Iterable[int] | None = None,
                  bases: Iterable[str] | None = None) -> Iterator[Pairing]:
    subset = _resolve_subset(network, flight_subset)
    if not subset:
        return
    base_set = set(bases) if bases is not None else set(network.base_airports)
    succ = _successors(network, rules)
    flights = network.flights

    by_first: dict[int, list[Duty]] = {}
    for d in iter_duties(network, rules, subset):
        by_first.setdefault(d.flights[0], []).append(d)

    def extend(chain: list[Duty], base: str) -> Iterator[Pairing]:
        last = flights[chain[-1].flights[-1]]
        if last.destination == base:
            p = Pairing(tuple(chain), CrewBase(base))
            yield Pairing(p.duties, p.base, pairing_cost(p, cost))
        if len(chain) >= rules.pairing_max_duties:
            return
        start = chain[0].start
        for j in succ.rest[last.id]:
            for d in by_first.get(j, ()):
                if d.end - start > rules.tafb_max:
                    continue
                chain.append(d)
                yield from extend(chain, base)
                chain.pop()

    for i in sorted(by_first):
        origin = flights[i].origin
        if origin not in base_set:
            continue
        for d in by_first[i]:
            if d.elapsed > rules.tafb_max:
                continue
            yield from extend([d], origin)


def enumerate_pairings(network: FlightNetwork, rules: LegalityRules, cost: CostRules,
                       flight_subset: Iterable[int] | None = None,
                       bases: Iterable[str] | None = None,
                       limit: int | None = None) -> list[Pairing]:
    """All legal pairings whose flights lie in ``flight_subset``, sorted by flight sequence.

    ``limit`` truncates the depth-first stream before sorting; callers that
    need the exact set leave it unset.
    """
    out = []
    for p in iter_pairings(network, rules, cost, flight_subset, bases):
        out.append(p)
        if limit is not None and len(out) >= limit:
            break
    out.sort(key=lambda p: p.flights)
    return out


def reduced_cost(p: Pairing, duals: DualVector | Mapping[int, float]) -> float:
    total = 0.0
    for f in p.flights:
        try:
            total += float(duals[f])
        except (IndexError, KeyError):
            raise KeyError(f"no dual value for flight {f}") from None
    return p.cost - total


def price(request: PricingRequest, network: FlightNetwork, rules: LegalityRules,
          cost: CostRules, bases: Iterable[str] | None = None,
          exclude: frozenset | set = frozenset()) -> list[Pairing]:
    """Most negative reduced-cost pairings over the request's flight subset.

    Pairings whose flight sequence is in ``exclude`` are skipped before the
    ``max_columns`` cut.
    """
    found = []
    for p in iter_pairings(network, rules, cost, request.flight_subset, bases):
        if p.flights in exclude:
            continue
        rc = reduced_cost(p, request.duals)
        if rc < request.reduced_cost_tolerance:
            found.append((rc, p.flights, p))
    found.sort(key=lambda t: (t[0], t[1]))
    return [p for _, _, p in found[:request.max_columns]]


def price_pool(pool: Sequence[Pairing], duals: DualVector, max_columns: int,
               tolerance: float = -1e-6, exclude: frozenset | set = frozenset()) -> list[Pairing]:
    """Pricing over a pre-enumerated pairing list (same ordering contract as ``price``)."""
    if not pool:
        return []
    found = [(reduced_cost(p, duals), p.flights, p) for p in pool if p.flights not in exclude]
    found = [t for t in found if t[0] < tolerance]
    found.sort(key=lambda t: (t[0], t[1]))
    return [p for _, _, p in found[:max_columns]]
