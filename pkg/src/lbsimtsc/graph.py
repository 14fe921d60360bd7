"""Sparse batch graph built from a distance submatrix.

Per row: distances become similarities 1/exp(alpha*d); when at least k
candidates sit at distance exactly zero (the row instance itself always
qualifies on a same-dataset batch), k of them are drawn at random with equal
weight, otherwise the k most similar candidates keep their similarities as raw
weights.  Raw weights are then normalized so every row sums to one.

Row RNG streams are derived from (seed, batch_id, row), so a graph is
reproducible regardless of row processing order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDistance, KTooLarge


@dataclass(frozen=True)
class GraphConfig:
    alpha: float
    k: int
    seed: int = 0
    exclude_self: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass
class BatchGraph:
    m: int
    targets: list[np.ndarray]  # per-row neighbor indices
    weights: list[np.ndarray]  # per-row weights, each row sums to 1

    def as_matrix(self) -> np.ndarray:
        E = np.zeros((self.m, self.m), dtype=np.float64)
        for i, (t, w) in enumerate(zip(self.targets, self.weights)):
            E[i, t] = w
        return E

    def to_json_dict(self, cfg: GraphConfig) -> dict:
        return {
            "m": self.m,
            "k": cfg.k,
            "alpha": cfg.alpha,
            "edges": [
                [{"to": int(t), "w": float(w)} for t, w in zip(ts, ws)]
                for ts, ws in zip(self.targets, self.weights)
            ],
        }

    def dump_json(self, cfg: GraphConfig) -> str:
        return json.dumps(self.to_json_dict(cfg), indent=2)


def to_similarity(d_row: np.ndarray, alpha: float) -> np.ndarray:
    """1/exp(alpha * d) per element; values in (0, 1]."""
    d_row = np.asarray(d_row, dtype=np.float64)
    if np.any(d_row < 0):
        raise InvalidDistance("distances must be >= 0")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return np.exp(-alpha * d_row)


def _row_rng(seed: int, batch_id: int, row: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(batch_id, row))
    return np.random.Generator(np.random.PCG64(ss))


def select_neighbors(
    d_row: np.ndarray,
    a_row: np.ndarray,
    k: int,
    rng: np.random.Generator,
    exclude: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pick k neighbors for one row; returns (indices, raw weights).

    Zero-distance candidates are preferred: k of them are sampled uniformly
    without replacement, each with raw weight 1/k.  With fewer than k zeros
    the k highest-similarity candidates are taken instead (ties broken by
    lowest index), keeping their similarities as raw weights.  The zero test
    is exact: the envelope distance is exactly 0.0 whenever every point falls
    inside the envelope, so no epsilon is needed.
    """
    d_row = np.asarray(d_row, dtype=np.float64)
    m = d_row.shape[0]
    candidates = m if exclude is None else m - 1
    if k > candidates:
        raise KTooLarge(f"k={k} exceeds {candidates} candidates")

    zero = d_row == 0.0
    if exclude is not None:
        zero = zero.copy()
        zero[exclude] = False
    q = np.flatnonzero(zero)
    if len(q) >= k:
        idx = np.sort(rng.choice(q, size=k, replace=False))
        return idx.astype(np.int64), np.full(k, 1.0 / k)

    a = np.asarray(a_row, dtype=np.float64)
    if exclude is not None:
        a = a.copy()
        a[exclude] = -np.inf
    order = np.argsort(-a, kind="stable")[:k]
    idx = np.sort(order).astype(np.int64)
    return idx, np.asarray(a_row, dtype=np.float64)[idx]


def _normalize(raw: np.ndarray) -> np.ndarray:
    # equal raw weights normalize to exactly 1/k; avoid rounding them through
    # the division
    if np.all(raw == raw[0]):
        return np.full(raw.shape, 1.0 / raw.shape[0])
    return raw / raw.sum()


def build_graph(d_batch: np.ndarray, cfg: GraphConfig, batch_id: int = 0) -> BatchGraph:
    """Row-stochastic k-sparse graph over one batch's distance submatrix."""
    d = np.asarray(d_batch, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("batch distance matrix must be square")
    if np.any(d < 0):
        raise InvalidDistance("distances must be >= 0")
    m = d.shape[0]
    targets: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    for i in range(m):
        a_row = to_similarity(d[i], cfg.alpha)
        rng = _row_rng(cfg.seed, batch_id, i)
        exclude = i if cfg.exclude_self else None
        idx, raw = select_neighbors(d[i], a_row, cfg.k, rng, exclude=exclude)
        targets.append(idx)
        weights.append(_normalize(raw))
    return BatchGraph(m, targets, weights)
