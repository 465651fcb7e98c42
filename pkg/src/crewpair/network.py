"""Flights, duties, pairings, legality rules and the pairing cost function.

Time is integer minutes from the start of the planning horizon. Flights are
indexed 0..n-1 in departure order, which makes every legal connection an
ordered pair (i, j) with i < j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


class StructureError(ValueError):
    """A pairing or duty that is malformed, as opposed to merely illegal."""


@dataclass(frozen=True)
class Flight:
    id: int
    origin: str
    destination: str
    dep_time: int
    arr_time: int

    def __post_init__(self):
        if self.arr_time <= self.dep_time:
            raise ValueError(f"flight {self.id}: arrival must follow departure")

    @property
    def block(self) -> int:
        return self.arr_time - self.dep_time


@dataclass(frozen=True)
class CrewBase:
    airport: str


@dataclass(frozen=True)
class LegalityRules:
    sit_min: int = 30
    sit_max: int = 240
    duty_max_flying: int = 480
    duty_max_elapsed: int = 840
    duty_max_flights: int = 5
    rest_min: int = 600
    rest_max: int = 2160
    pairing_max_duties: int = 4
    tafb_max: int = 7200
    brief: int = 45
    debrief: int = 30

    def __post_init__(self):
        values = [getattr(self, name) for name in self.__dataclass_fields__]
        if any(v <= 0 for v in values):
            raise ValueError("all legality rule values must be positive")
        if self.sit_min >= self.sit_max:
            raise ValueError("sit_min must be below sit_max")
        if self.rest_min <= self.sit_max:
            raise ValueError("rest_min must exceed sit_max")
        if self.rest_min >= self.rest_max:
            raise ValueError("rest_min must be below rest_max")

    def is_sit(self, gap: int) -> bool:
        return self.sit_min <= gap <= self.sit_max

    def is_rest(self, gap: int) -> bool:
        return self.rest_min <= gap <= self.rest_max


@dataclass(frozen=True)
class CostRules:
    rate_flying: float = 1.0
    rate_tafb: float = 0.25
    hotel_cost: float = 150.0
    fixed_cost: float = 200.0

    def __post_init__(self):
        if min(self.rate_flying, self.rate_tafb, self.hotel_cost, self.fixed_cost) < 0:
            raise ValueError("cost rates must be non-negative")


class FlightNetwork:
    """An immutable, departure-sorted flight schedule plus its crew bases.

    Flights handed to the constructor are re-indexed by (dep_time, input
    order), so ``network.flights[k].id == k`` always holds.
    """

    def __init__(self, flights: Iterable[Flight], bases: Iterable[str]):
        raw = list(flights)
        order = sorted(range(len(raw)), key=lambda k: (raw[k].dep_time, k))
        self.flights: tuple[Flight, ...] = tuple(
            Flight(new_id, raw[k].origin, raw[k].destination, raw[k].dep_time, raw[k].arr_time)
            for new_id, k in enumerate(order)
        )
        self.bases: tuple[CrewBase, ...] = tuple(CrewBase(b) for b in dict.fromkeys(bases))
        airports = self.airports
        for base in self.bases:
            if base.airport not in airports:
                raise ValueError(f"base {base.airport!r} is not served by any flight")

    def __len__(self) -> int:
        return len(self.flights)

    def __getitem__(self, idx: int) -> Flight:
        return self.flights[idx]

    def __iter__(self):
        return iter(self.flights)

    @property
    def airports(self) -> set[str]:
        return {f.origin for f in self.flights} | {f.destination for f in self.flights}

    @property
    def base_airports(self) -> frozenset[str]:
        return frozenset(b.airport for b in self.bases)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlightNetwork):
            return NotImplemented
        return self.flights == other.flights and self.bases == other.bases

    def __repr__(self) -> str:
        return f"FlightNetwork({len(self.flights)} flights, bases={[b.airport for b in self.bases]})"


@dataclass(frozen=True)
class Duty:
    flights: tuple[int, ...]
    start: int
    end: int
    flying: int

    @classmethod
    def from_flights(cls, network: FlightNetwork, flights: Sequence[int], rules: LegalityRules) -> "Duty":
        if not flights:
            raise StructureError("a duty needs at least one flight")
        first, last = network[flights[0]], network[flights[-1]]
        return cls(tuple(flights), first.dep_time - rules.brief, last.arr_time + rules.debrief,
                   sum(network[f].block for f in flights))

    @property
    def elapsed(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Pairing:
    duties: tuple[Duty, ...]
    base: CrewBase
    cost: float = field(default=0.0, compare=False)

    @property
    def flights(self) -> tuple[int, ...]:
        return tuple(f for d in self.duties for f in d.flights)

    @property
    def tafb(self) -> int:
        return self.duties[-1].end - self.duties[0].start

    @property
    def flying(self) -> int:
        return sum(d.flying for d in self.duties)

    def connections(self) -> list[tuple[int, int]]:
        seq = self.flights
        return list(zip(seq[:-1], seq[1:]))


def split_into_duties(network: FlightNetwork, flights: Sequence[int], rules: LegalityRules) -> list[list[int]]:
    """Split a flight sequence at every gap longer than a sit.

    The sit and rest windows are disjoint, so a flight sequence determines its
    duty structure. Legality of each gap is not checked here.
    """
    if not flights:
        return []
    duties = [[flights[0]]]
    for prev, nxt in zip(flights[:-1], flights[1:]):
        if network[nxt].dep_time - network[prev].arr_time > rules.sit_max:
            duties.append([nxt])
        else:
            duties[-1].append(nxt)
    return duties


def build_pairing(network: FlightNetwork, flights: Sequence[int], rules: LegalityRules,
                  cost: CostRules | None = None, base: str | None = None) -> Pairing:
    """Assemble a Pairing from a flight sequence, costing it when ``cost`` is given."""
    if not flights:
        raise StructureError("a pairing needs at least one flight")
    duties = tuple(Duty.from_flights(network, d, rules) for d in split_into_duties(network, flights, rules))
    p = Pairing(duties, CrewBase(base or network[flights[0]].origin))
    if cost is not None:
        p = Pairing(p.duties, p.base, pairing_cost(p, cost))
    return p


def connection_universe(network: FlightNetwork, rules: LegalityRules) -> set[tuple[int, int]]:
    """All ordered pairs (i, j), i < j, that may be flown back to back."""
    by_origin: dict[str, list[Flight]] = {}
    for f in network:
        by_origin.setdefault(f.origin, []).append(f)
    out = set()
    for fi in network:
        for fj in by_origin.get(fi.destination, ()):
            if fj.id <= fi.id:
                continue
            gap = fj.dep_time - fi.arr_time
            if rules.is_sit(gap) or rules.is_rest(gap):
                out.add((fi.id, fj.id))
    return out


def duty_violations(duty: Duty, network: FlightNetwork, rules: LegalityRules) -> list[str]:
    v = []
    fl = duty.flights
    for a, b in zip(fl[:-1], fl[1:]):
        if network[a].destination != network[b].origin:
            v.append("duty-continuity")
            break
    for a, b in zip(fl[:-1], fl[1:]):
        if not rules.is_sit(network[b].dep_time - network[a].arr_time):
            v.append("sit-time")
            break
    if duty.flying > rules.duty_max_flying:
        v.append("duty-flying")
    if duty.elapsed > rules.duty_max_elapsed:
        v.append("duty-elapsed")
    if len(fl) > rules.duty_max_flights:
        v.append("duty-flights")
    return v


def check_pairing_legal(p: Pairing, rules: LegalityRules, network: FlightNetwork) -> tuple[bool, list[str]]:
    """Return (legal, violations) where violations names every failed rule."""
    if not p.duties or any(not d.flights for d in p.duties):
        raise StructureError("pairing has an empty duty")
    violations: list[str] = []
    for d in p.duties:
        for item in duty_violations(d, network, rules):
            if item not in violations:
                violations.append(item)
    first, last = network[p.duties[0].flights[0]], network[p.duties[-1].flights[-1]]
    if first.origin != p.base.airport:
        violations.append("base-start")
    if last.destination != p.base.airport:
        violations.append("base-return")
    for d1, d2 in zip(p.duties[:-1], p.duties[1:]):
        a, b = network[d1.flights[-1]], network[d2.flights[0]]
        if a.destination != b.origin:
            violations.append("rest-continuity")
            break
    for d1, d2 in zip(p.duties[:-1], p.duties[1:]):
        if not rules.is_rest(network[d2.flights[0]].dep_time - network[d1.flights[-1]].arr_time):
            violations.append("rest-time")
            break
    if len(p.duties) > rules.pairing_max_duties:
        violations.append("pairing-duties")
    if p.tafb > rules.tafb_max:
        violations.append("tafb")
    return not violations, violations


def pairing_cost(p: Pairing, cost: CostRules) -> float:
    """Linear crew cost: flying and TAFB minutes, hotels per overnight, a fixed charge per duty."""
    n_duties = len(p.duties)
    return (cost.rate_flying * p.flying
            + cost.rate_tafb * p.tafb
            + cost.hotel_cost * (n_duties - 1)
            + cost.fixed_cost * n_duties)
