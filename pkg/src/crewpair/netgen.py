"""Synthetic hub-and-spoke schedules.

Flights are laid down as whole trip templates that start and end at a crew
base (out-and-back to a spoke, a hub-hub shuttle, a trip through a second
hub's bank, an overnight at a remote hub). Every flight therefore lies on at
least one legal pairing, while flights of different trips meeting at a hub
create the alternative connections the optimizer has to choose between.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Flight, FlightNetwork, LegalityRules, build_pairing, check_pairing_legal

DAY = 1440


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NetGenConfig:
    num_hubs: int = 3
    num_spokes: int = 8
    num_bases: int = 2
    flights_per_day: int = 60
    num_days: int = 2
    seed: int = 0
    max_retries: int = 20

    def __post_init__(self):
        if self.num_hubs < 1 or self.num_spokes < 0 or self.num_days < 1:
            raise ValueError("need at least one hub and one day")
        if not 1 <= self.num_bases <= self.num_hubs:
            raise ValueError("num_bases must lie in [1, num_hubs]")
        if self.flights_per_day < 2:
            raise ValueError("flights_per_day must be at least 2")


def _airports(cfg: NetGenConfig):
    hubs = [f"H{k}" for k in range(cfg.num_hubs)]
    spokes = {h: [] for h in hubs}
    for s in range(cfg.num_spokes):
        spokes[hubs[s % cfg.num_hubs]].append(f"S{s}")
    return hubs, hubs[:cfg.num_bases], spokes


def _block_times(rng: np.random.Generator, hubs, spokes) -> dict[frozenset, int]:
    blocks = {}
    for h in hubs:
        for s in spokes[h]:
            blocks[frozenset((h, s))] = int(rng.integers(50, 111))
        for g in hubs:
            if g < h:
                blocks[frozenset((h, g))] = int(rng.integers(80, 141))
    return blocks


def _trip(rng, legs, blocks, start, sit=(40, 100), rest_after=None):
    """Lay legs end to end from ``start``; ``rest_after`` inserts an overnight after that leg."""
    out = []
    t = start
    for k, (a, b) in enumerate(legs):
        dur = blocks[frozenset((a, b))]
        out.append((a, b, t, t + dur))
        t += dur
        if rest_after is not None and k == rest_after:
            t += int(rng.integers(660, 901))
        else:
            t += int(rng.integers(sit[0], sit[1] + 1))
    return out


def _one_day(rng, cfg, day, hubs, bases, spokes, blocks):
    flights = []
    remaining = cfg.flights_per_day
    last_day = day == cfg.num_days - 1
    while remaining >= 2:
        base = bases[int(rng.integers(len(bases)))]
        others = [h for h in hubs if h != base]
        kinds = []
        if spokes[base]:
            kinds += ["spoke", "spoke"]
        if others:
            kinds.append("shuttle")
            if remaining >= 4 and any(spokes[h] for h in others):
                kinds += ["bank", "bank"]
                if not last_day:
                    kinds.append("overnight")
        if not kinds:
            raise GenerationError(f"base {base} has neither spokes nor other hubs to fly to")
        kind = kinds[int(rng.integers(len(kinds)))]
        morning = day * DAY + int(rng.integers(360, 1080))
        if kind == "spoke":
            s = spokes[base][int(rng.integers(len(spokes[base])))]
            trip = _trip(rng, [(base, s), (s, base)], blocks, morning, sit=(40, 150))
        elif kind == "shuttle":
            h = others[int(rng.integers(len(others)))]
            trip = _trip(rng, [(base, h), (h, base)], blocks, morning, sit=(40, 150))
        else:
            h = [g for g in others if spokes[g]][int(rng.integers(sum(1 for g in others if spokes[g])))]
            s = spokes[h][int(rng.integers(len(spokes[h])))]
            legs = [(base, h), (h, s), (s, h), (h, base)]
            if kind == "bank":
                trip = _trip(rng, legs, blocks, day * DAY + int(rng.integers(360, 780)), sit=(40, 90))
            else:
                trip = _trip(rng, legs, blocks, day * DAY + int(rng.integers(960, 1140)), rest_after=0)
        flights.extend(trip)
        remaining -= len(trip)
    return flights


def generate_network(cfg: NetGenConfig, rules: LegalityRules | None = None) -> FlightNetwork:
    """Deterministic per ``cfg.seed``; retries with derived seeds if a planted trip is illegal."""
    rules = rules or LegalityRules()
    hubs, bases, spokes = _airports(cfg)
    problems = []
    for attempt in range(cfg.max_retries):
        rng = np.random.default_rng([cfg.seed, attempt])
        blocks = _block_times(rng, hubs, spokes)
        raw, trips = [], []
        for day in range(cfg.num_days):
            legs = _one_day(rng, cfg, day, hubs, bases, spokes, blocks)
            raw.extend(legs)
        flights = [Flight(k, a, b, dep, arr) for k, (a, b, dep, arr) in enumerate(raw)]
        network = FlightNetwork(flights, bases)
        bad = _unplanted(network, rules)
        if not bad:
            return network
        problems.append(f"attempt {attempt}: {len(bad)} flights on no legal trip")
    raise GenerationError("could not generate a coverable network; " + "; ".join(problems[-3:]))


def _unplanted(network: FlightNetwork, rules: LegalityRules) -> list[int]:
    """Flights not lying on any base-to-base out-and-back of at most four legs."""
    covered = set()
    fl = network.flights
    bases = network.base_airports
    by_origin: dict[str, list[int]] = {}
    for f in fl:
        by_origin.setdefault(f.origin, []).append(f.id)

    def walk(seq):
        last = fl[seq[-1]]
        if last.destination == fl[seq[0]].origin and len(seq) > 1:
            if check_pairing_legal(build_pairing(network, seq, rules), rules, network)[0]:
                covered.update(seq)
        if len(seq) >= 4:
            return
        for j in by_origin.get(last.destination, ()):
            gap = fl[j].dep_time - last.arr_time
            if j > seq[-1] and (rules.is_sit(gap) or rules.is_rest(gap)):
                walk(seq + [j])

    for f in fl:
        if f.origin in bases:
            walk([f.id])
    return [f.id for f in fl if f.id not in covered]
