"""Variational graph auto-encoder for link prediction, in plain numpy.

Encoder: two graph-convolution layers sharing the normalised propagation
matrix P,

    H      = relu(P F W0)
    mu     = P H Wmu
    logstd = P H Wsig

Decoder: p_ij = sigmoid(z_i . z_j) with z = mu + noise * exp(logstd).
The loss is a positive-reweighted binary cross-entropy over a pair domain
plus the KL divergence of q(z) from N(0, I). Gradients are derived by hand;
``loss_and_grads`` is what the finite-difference check exercises.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

log = logging.getLogger(__name__)

Pair = tuple[int, int]


class NotEnoughEdges(ValueError):
    """The graph has too few positive or negative pairs for a held-out split."""


@dataclass(frozen=True)
class VgaeConfig:
    hidden_dim: int = 32
    latent_dim: int = 16
    epochs: int = 100
    learning_rate: float = 0.03
    early_stop_roc: float = 0.9
    seed: int = 0
    optimizer: str = "adam"
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if self.hidden_dim <= 0 or self.latent_dim <= 0 or self.epochs < 0:
            raise ValueError("dimensions must be positive")
        # zero is allowed so that a frozen model can be trained as a no-op
        if not 0 <= self.learning_rate < 1:
            raise ValueError("learning_rate must lie in [0, 1)")
        if not 0 < self.early_stop_roc <= 1:
            raise ValueError("early_stop_roc must lie in (0, 1]")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must lie in (0, 1)")


@dataclass
class VgaeModel:
    W0: np.ndarray
    Wmu: np.ndarray
    Wsig: np.ndarray
    propagation: np.ndarray
    features: np.ndarray
    mu: np.ndarray | None = None
    logstd: np.ndarray | None = None
    roc: float = 0.0
    epochs_run: int = 0
    history: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def weights(self) -> dict[str, np.ndarray]:
        return {"W0": self.W0, "Wmu": self.Wmu, "Wsig": self.Wsig}

    def save_weights(self, directory: str | Path):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, w in self.weights.items():
            np.savetxt(d / f"{name}.txt", w, fmt="%.10g")


@dataclass(frozen=True)
class PredictionSet:
    pairs: list[Pair]
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.pairs)


def normalize_adjacency(adj: np.ndarray) -> np.ndarray:
    """Symmetric propagation matrix D^-1/2 (S + I) D^-1/2 with S = A + A'."""
    adj = np.asarray(adj, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be square")
    S = adj + adj.T + np.eye(adj.shape[0])
    d = 1.0 / np.sqrt(S.sum(axis=1))
    return S * d[:, None] * d[None, :]


def encode(weights: dict[str, np.ndarray], propagation: np.ndarray, features: np.ndarray):
    """Return (mu, logstd, cache); cache holds intermediates for backprop."""
    if features.shape[1] != weights["W0"].shape[0]:
        raise ValueError(f"feature width {features.shape[1]} does not match W0 {weights['W0'].shape}")
    pre = propagation @ (features @ weights["W0"])
    H = np.maximum(pre, 0.0)
    PH = propagation @ H
    mu = PH @ weights["Wmu"]
    logstd = PH @ weights["Wsig"]
    return mu, logstd, (pre, H, PH)


def decode(z: np.ndarray) -> np.ndarray:
    return expit(z @ z.T)


def _softplus(x):
    return np.logaddexp(0.0, x)


def loss(mu: np.ndarray, logstd: np.ndarray, z: np.ndarray,
         labels: np.ndarray, mask: np.ndarray) -> tuple[float, float, float]:
    """(total, reconstruction, kl) for the pairs selected by ``mask``.

    Positives are up-weighted by #negatives/#positives in the domain and the
    reconstruction term is averaged over the domain size.
    """
    n_dom = mask.sum()
    n_pos = (labels * mask).sum()
    pos_weight = (n_dom - n_pos) / n_pos if n_pos else 1.0
    L = z @ z.T
    terms = pos_weight * labels * _softplus(-L) + (1 - labels) * _softplus(L)
    rec = float((terms * mask).sum() / n_dom)
    n = mu.shape[0]
    kl = float((np.exp(2 * logstd) + mu ** 2 - 1 - 2 * logstd).sum() / (2 * n * n))
    return rec + kl, rec, kl


def loss_and_grads(weights: dict[str, np.ndarray], propagation: np.ndarray, features: np.ndarray,
                   labels: np.ndarray, mask: np.ndarray, noise: np.ndarray):
    mu, logstd, (pre, H, PH) = encode(weights, propagation, features)
    std = np.exp(logstd)
    z = mu + noise * std
    total, rec, kl = loss(mu, logstd, z, labels, mask)

    n = mu.shape[0]
    n_dom = mask.sum()
    n_pos = (labels * mask).sum()
    pos_weight = (n_dom - n_pos) / n_pos if n_pos else 1.0
    L = z @ z.T
    G = mask * (-pos_weight * labels * expit(-L) + (1 - labels) * expit(L)) / n_dom
    dz = (G + G.T) @ z
    dmu = dz + mu / (n * n)
    dlogstd = dz * noise * std + (np.exp(2 * logstd) - 1) / (n * n)

    grads = {"Wmu": PH.T @ dmu, "Wsig": PH.T @ dlogstd}
    dPH = dmu @ weights["Wmu"].T + dlogstd @ weights["Wsig"].T
    dpre = (propagation.T @ dPH) * (pre > 0)
    grads["W0"] = features.T @ (propagation.T @ dpre)
    return total, grads


def evaluate_roc(model_or_scores, positives: Sequence[Pair] | np.ndarray, negatives: Sequence[Pair] | np.ndarray) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic (ties averaged).

    Pass a trained model with pair lists, or ``None`` with two score arrays.
    """
    if len(positives) == 0 or len(negatives) == 0:
        raise ValueError("ROC needs at least one positive and one negative")
    if model_or_scores is None:
        pos = np.asarray(positives, dtype=float)
        neg = np.asarray(negatives, dtype=float)
    else:
        pos = pair_scores(model_or_scores, positives)
        neg = pair_scores(model_or_scores, negatives)
    ranks = rankdata(np.concatenate([pos, neg]))
    n_pos, n_neg = len(pos), len(neg)
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def pair_scores(model: VgaeModel, pairs: Sequence[Pair]) -> np.ndarray:
    if len(pairs) == 0:
        return np.zeros(0)
    idx = np.asarray(pairs, dtype=int)
    z = model.mu
    return expit(np.einsum("kd,kd->k", z[idx[:, 0]], z[idx[:, 1]]))


def predict_negatives(model: VgaeModel, negatives: Sequence[Pair]) -> PredictionSet:
    """Score every non-edge with the posterior mean and rank them, best first."""
    if len(negatives) == 0:
        return PredictionSet([], np.zeros(0))
    s = pair_scores(model, negatives)
    s = np.clip(s, np.finfo(float).tiny, 1 - np.finfo(float).eps)
    order = np.argsort(-s, kind="stable")
    return PredictionSet([tuple(negatives[k]) for k in order], s[order])


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out))


def init_weights(config: VgaeConfig, in_dim: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    return {
        "W0": _glorot(rng, in_dim, config.hidden_dim),
        "Wmu": _glorot(rng, config.hidden_dim, config.latent_dim),
        "Wsig": _glorot(rng, config.hidden_dim, config.latent_dim),
    }


@dataclass
class EdgeSplit:
    train_pos: list[Pair]
    val_pos: list[Pair]
    val_neg: list[Pair]
    negatives: list[Pair]


def split_edges(adj: np.ndarray, domain: Sequence[Pair], fraction: float,
                rng: np.random.Generator) -> EdgeSplit:
    pos = [p for p in domain if adj[p]]
    neg = [p for p in domain if not adj[p]]
    if len(pos) < 2:
        raise NotEnoughEdges(f"need at least two positive pairs to hold one out, got {len(pos)}")
    n_val = max(1, int(round(fraction * len(pos))))
    n_val = min(n_val, len(pos) - 1, len(neg))
    if n_val < 1:
        raise NotEnoughEdges("no negative pairs available for validation")
    val_idx = set(rng.choice(len(pos), size=n_val, replace=False).tolist())
    neg_idx = rng.choice(len(neg), size=n_val, replace=False)
    return EdgeSplit(
        [p for k, p in enumerate(pos) if k not in val_idx],
        [pos[k] for k in sorted(val_idx)],
        [neg[k] for k in sorted(neg_idx.tolist())],
        neg,
    )


def train(config: VgaeConfig, adj: np.ndarray, features: np.ndarray,
          domain: Sequence[Pair] | None = None) -> tuple[VgaeModel, EdgeSplit]:
    """Fit a fresh model on ``adj`` and report held-out ROC.

    A seeded slice of the positive pairs (plus as many sampled negatives) is
    withheld from message passing and from the loss; ROC on that slice is
    checked after every update and training stops once it reaches
    ``early_stop_roc``.
    """
    adj = np.asarray(adj, dtype=float)
    n = adj.shape[0]
    if domain is None:
        domain = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng(config.seed)
    split = split_edges(adj, domain, config.holdout_fraction, rng)

    train_adj = np.zeros_like(adj)
    for p in split.train_pos:
        train_adj[p] = 1.0
    P = normalize_adjacency(train_adj)

    mask = np.zeros((n, n))
    for p in domain:
        mask[p] = 1.0
    for p in split.val_pos + split.val_neg:
        mask[p] = 0.0
    labels = train_adj

    F = np.asarray(features, dtype=float)
    weights = init_weights(config, F.shape[1], rng)
    m = {k: np.zeros_like(w) for k, w in weights.items()}
    v = {k: np.zeros_like(w) for k, w in weights.items()}
    b1, b2, eps = 0.9, 0.999, 1e-8

    model = VgaeModel(weights["W0"], weights["Wmu"], weights["Wsig"], P, F)
    roc = 0.0
    for epoch in range(1, config.epochs + 1):
        noise = rng.standard_normal((n, config.latent_dim))
        total, grads = loss_and_grads(weights, P, F, labels, mask, noise)
        if not np.isfinite(total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise FloatingPointError(f"non-finite loss {total} at epoch {epoch} (n={n}, lr={config.learning_rate})")
        for k in weights:
            if config.optimizer == "adam":
                m[k] = b1 * m[k] + (1 - b1) * grads[k]
                v[k] = b2 * v[k] + (1 - b2) * grads[k] ** 2
                mhat = m[k] / (1 - b1 ** epoch)
                vhat = v[k] / (1 - b2 ** epoch)
                weights[k] = weights[k] - config.learning_rate * mhat / (np.sqrt(vhat) + eps)
            else:
                weights[k] = weights[k] - config.learning_rate * grads[k]
        model.W0, model.Wmu, model.Wsig = weights["W0"], weights["Wmu"], weights["Wsig"]
        model.mu, model.logstd, _ = encode(weights, P, F)
        roc = evaluate_roc(model, split.val_pos, split.val_neg)
        model.history.append((epoch, float(total), roc))
        model.epochs_run = epoch
        if roc >= config.early_stop_roc:
            break
    if model.mu is None:
        model.mu, model.logstd, _ = encode(weights, P, F)
        roc = evaluate_roc(model, split.val_pos, split.val_neg)
    model.roc = roc
    log.debug("vgae trained %d epochs, roc %.3f", model.epochs_run, roc)
    return model, split
