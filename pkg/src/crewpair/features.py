"""Flight-connection graphs of LP solutions and the learning inputs built from them.

Flights are graph vertices; a pairing flown in an LP solution contributes an
edge for each consecutive flight pair. Because flight ids follow departure
order every edge (i, j) has i < j and adjacency matrices are strictly upper
triangular.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lp import LpSolution


@dataclass(frozen=True)
class GlobalAdjacency:
    matrix: np.ndarray
    t: int


@dataclass(frozen=True)
class IterationRecord:
    lp: LpSolution
    adjacency: np.ndarray
    weighted: np.ndarray
    cost_ratio: float

    @property
    def cost(self) -> float:
        return self.lp.cost


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    Y: np.ndarray
    I: np.ndarray
    O: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.X, self.Y, self.I, self.O])

    @property
    def shape(self) -> tuple[int, int]:
        n = self.X.shape[0]
        return n, self.X.shape[1] + self.Y.shape[1] + 2


def build_adjacency(lp: LpSolution, num_flights: int,
                    universe: set[tuple[int, int]] | None = None,
                    eps: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Binary and primal-weighted adjacency of the pairings with positive primal value."""
    A = np.zeros((num_flights, num_flights))
    W = np.zeros((num_flights, num_flights))
    for j in lp.support(eps):
        seq = lp.columns[j]
        for a, b in zip(seq[:-1], seq[1:]):
            if a >= b:
                raise ValueError(f"connection ({a}, {b}) violates departure ordering")
            if universe is not None and (a, b) not in universe:
                raise ValueError(f"connection ({a}, {b}) is not a legal connection")
            A[a, b] = 1.0
            W[a, b] += lp.primal[j]
    return A, A * W


def make_record(lp: LpSolution, num_flights: int, previous_cost: float | None,
                universe: set[tuple[int, int]] | None = None) -> IterationRecord:
    A, W = build_adjacency(lp, num_flights, universe)
    ratio = 1.0 if previous_cost is None else previous_cost / lp.cost
    return IterationRecord(lp, A, W, ratio)


def superimpose(history: Sequence[np.ndarray]) -> GlobalAdjacency:
    if not history:
        raise ValueError("empty adjacency history")
    shape = history[0].shape
    out = np.zeros(shape, dtype=bool)
    for A in history:
        if A.shape != shape:
            raise ValueError(f"adjacency shape {A.shape} does not match {shape}")
        if np.any(np.tril(A) != 0):
            raise ValueError("adjacency must be strictly upper triangular")
        out |= A != 0
    return GlobalAdjacency(out.astype(float), len(history))


def enhanced_primal(records: Sequence[IterationRecord]) -> np.ndarray:
    X = np.zeros_like(records[0].weighted)
    for r in records:
        X += r.cost_ratio * r.weighted
    return X


def enhanced_dual(records: Sequence[IterationRecord]) -> np.ndarray:
    cols = []
    for r in records:
        if r.cost == 0:
            raise ValueError("LP cost of zero makes the dual share undefined")
        cols.append(r.cost_ratio / r.cost * np.asarray(r.lp.duals, dtype=float))
    return np.column_stack(cols)


def enhanced_degrees(records: Sequence[IterationRecord]) -> tuple[np.ndarray, np.ndarray]:
    n = records[0].weighted.shape[0]
    I = np.zeros((n, 1))
    O = np.zeros((n, 1))
    for r in records:
        I[:, 0] += r.cost_ratio * r.weighted.sum(axis=0)
        O[:, 0] += r.cost_ratio * r.weighted.sum(axis=1)
    return I, O


def minmax(block: np.ndarray, per_column: bool = False) -> np.ndarray:
    """Scale into [0, 1]; a constant block (or column) maps to zeros."""
    if per_column:
        return np.column_stack([minmax(block[:, k]) for k in range(block.shape[1])]) if block.size else block
    if block.size == 0:
        return block.astype(float)
    lo, hi = block.min(), block.max()
    if hi - lo <= 0:
        return np.zeros_like(block, dtype=float)
    return (block - lo) / (hi - lo)


def assemble_features(records: Sequence[IterationRecord], per_column: bool = False) -> FeatureMatrix:
    if not records:
        raise ValueError("need at least one iteration record")
    X = enhanced_primal(records)
    Y = enhanced_dual(records)
    I, O = enhanced_degrees(records)
    return FeatureMatrix(minmax(X, per_column), minmax(Y, per_column), minmax(I, per_column), minmax(O, per_column))


def upper_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def partition_edges(g: GlobalAdjacency, domain: Iterable[tuple[int, int]]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    pos, neg = [], []
    M = g.matrix
    for i, j in domain:
        if i >= j:
            raise ValueError(f"pair ({i}, {j}) outside the strict upper triangle")
        (pos if M[i, j] else neg).append((i, j))
    return pos, neg


def save_grid(path: str | Path, array: np.ndarray):
    """Plain-text numeric grid, one matrix row per line."""
    np.savetxt(path, np.atleast_2d(array), fmt="%.10g")


def load_grid(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)
