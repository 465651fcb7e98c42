"""Turn ranked non-edge predictions into a pricing flight subset.

The top-ranked flight pairs contribute their endpoints until the learnt part
of the subset reaches floor(param1 * roc); the remaining slots are filled with
uniformly drawn flights so that the subset always holds ``param1`` flights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .network import Pairing
from .vgae import PredictionSet


class CombinerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CombinerConfig:
    param1: int
    seed: int = 0

    def validate(self, num_flights: int):
        if num_flights <= 0:
            raise CombinerConfigError("empty flight set")
        if self.param1 <= 0:
            raise CombinerConfigError("param1 must be positive")
        if self.param1 >= num_flights / 2:
            raise CombinerConfigError(f"param1={self.param1} must stay below |F|/2 = {num_flights / 2}")


@dataclass
class CombineOutcome:
    flight_subset: frozenset[int]
    learnt: list[int]
    randomly_drawn: list[int]
    pairs_used: int
    pairings: list[Pairing] = field(default_factory=list)

    @property
    def learnt_count(self) -> int:
        return len(self.learnt)

    @property
    def random_count(self) -> int:
        return len(self.randomly_drawn)

    def audit(self) -> dict:
        return {
            "learnt": self.learnt,
            "random": self.randomly_drawn,
            "pairs_used": self.pairs_used,
            "pairings": [list(p.flights) for p in self.pairings],
        }


def learnt_flights(ranked: Sequence[tuple[int, int]], cap: int) -> tuple[list[int], int]:
    """Endpoints of the ranked pairs, in order, never more than ``cap`` of them.

    Returns the flights and how many pairs were consumed. A pair that would
    push the set past ``cap`` keeps only the endpoints that still fit.
    """
    chosen: list[int] = []
    seen: set[int] = set()
    used = 0
    for i, j in ranked:
        if len(chosen) >= cap:
            break
        used += 1
        for f in (i, j):
            if f not in seen and len(chosen) < cap:
                seen.add(f)
                chosen.append(f)
    return chosen, used


def combine(predictions: PredictionSet, roc: float, num_flights: int, duals: np.ndarray,
            config: CombinerConfig,
            pairing_gen: Callable[[frozenset[int], np.ndarray], list[Pairing]] | None = None) -> CombineOutcome:
    config.validate(num_flights)
    if not 0 <= roc <= 1:
        raise ValueError(f"roc must lie in [0, 1], got {roc}")
    order = np.argsort(-np.asarray(predictions.scores), kind="stable")
    ranked = [predictions.pairs[k] for k in order]

    cap = math.floor(config.param1 * roc)
    learnt, used = learnt_flights(ranked, cap)

    gamma = config.param1 - len(learnt)
    rest = np.setdiff1d(np.arange(num_flights), np.array(learnt, dtype=int))
    rng = np.random.default_rng(config.seed)
    drawn = sorted(rng.choice(rest, size=min(gamma, rest.size), replace=False).tolist())

    subset = frozenset(learnt) | frozenset(drawn)
    pairings = pairing_gen(subset, duals) if pairing_gen is not None else []
    return CombineOutcome(subset, learnt, drawn, used, pairings)
