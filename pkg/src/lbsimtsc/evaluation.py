"""Accuracy, the Wilcoxon signed-rank test, and the construction benchmark.

The signed-rank test works on score differences rounded to 12 decimals (so
columns read from fixed-precision reports tie exactly, free of float dust),
drops zero differences, and ranks ties by midrank.  With no zeros and at most
25 pairs the p-value comes from the exact null distribution, enumerated by a
subset-sum walk over the doubled midranks; otherwise it falls back to the
normal approximation with tie correction (no continuity correction).  Zeros
force the approximation: that is the behavior of the reference stats stack
whose p-values the golden tests pin.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import distance
from .errors import DegenerateTest, LengthMismatch

ONE_SIDED_B_GREATER = "one_sided_b_greater"
TWO_SIDED = "two_sided"

EXACT_LIMIT = 25
_DECIMALS = 12


@dataclass
class PairedResults:
    names: tuple[str, str]
    scores: list[tuple[str, float, float]]  # (dataset id, score_a, score_b)

    def __post_init__(self):
        if len(self.scores) < 1:
            raise ValueError("need at least one score pair")
        for _, a, b in self.scores:
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise ValueError("scores must lie in [0, 1]")

    @classmethod
    def from_csv(cls, path: str | Path, names: tuple[str, str] = ("a", "b")) -> "PairedResults":
        """Rows of (dataset, score_a, score_b); a non-numeric first row is a header."""
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec:
                    continue
                try:
                    rows.append((rec[0].strip(), float(rec[1]), float(rec[2])))
                except ValueError:
                    if rows:
                        raise
                    names = (rec[1].strip(), rec[2].strip())
        return cls(names, rows)


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise LengthMismatch(f"{pred.shape} vs {truth.shape}")
    return float(np.mean(pred == truth))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_tail_counts(ranks2: np.ndarray) -> np.ndarray:
    """cnt[s] = number of sign assignments whose positive doubled-rank sum is s."""
    total = int(ranks2.sum())
    cnt = np.zeros(total + 1)
    cnt[0] = 1.0
    for r in ranks2:
        r = int(r)
        cnt[r:] += cnt[: total + 1 - r].copy()
    return cnt


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon(pairs: PairedResults, side: str) -> float:
    """p-value for H1 'column b scores higher' (one-sided) or 'differs' (two-sided)."""
    if side not in (ONE_SIDED_B_GREATER, TWO_SIDED):
        raise ValueError(f"unknown side {side!r}")
    d = np.round(
        np.array([b for _, _, b in pairs.scores]) - np.array([a for _, a, _ in pairs.scores]),
        _DECIMALS,
    )
    n_zero = int(np.sum(d == 0.0))
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise DegenerateTest("all score differences are zero")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n_zero == 0 and n <= EXACT_LIMIT:
        ranks2 = np.round(2 * ranks).astype(np.int64)
        cnt = _exact_tail_counts(ranks2)
        denom = 2.0**n
        w2 = int(round(2 * w_plus))
        p_ge = cnt[w2:].sum() / denom
        if side == ONE_SIDED_B_GREATER:
            return float(min(1.0, p_ge))
        p_le = cnt[: w2 + 1].sum() / denom
        return float(min(1.0, 2.0 * min(p_ge, p_le)))

    mean = n * (n + 1) / 4.0
    se2 = n * (n + 1) * (2 * n + 1)
    _, rep = np.unique(ranks, return_counts=True)
    se2 -= 0.5 * float(np.sum(rep.astype(np.float64) ** 3 - rep))
    se = math.sqrt(se2 / 24.0)
    z = (w_plus - mean) / se
    if side == ONE_SIDED_B_GREATER:
        return min(1.0, _normal_sf(z))
    return min(1.0, 2.0 * _normal_sf(abs(z)))


@dataclass
class BenchReport:
    n: int
    length: int
    radius: int
    workers: int
    dtw_seconds: float
    lb_seconds: float
    speedup: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def random_walks(n: int, length: int, seed: int) -> np.ndarray:
    """Seeded z-normalized Gaussian random walks (UCR-like morphology)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    X = np.cumsum(rng.standard_normal((n, length)), axis=1)
    mu = X.mean(axis=1, keepdims=True)
    sd = X.std(axis=1, keepdims=True)
    sd[sd == 0.0] = 1.0
    return (X - mu) / sd


def _time_best(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_graph_construction(
    n: int, length: int, r_frac: float, workers: int = 1, seed: int = 0, repeats: int = 1
) -> BenchReport:
    """Time pairwise DTW (unconstrained) vs pairwise LB_Keogh on random walks.

    Both methods run under the same worker count; kernels are warmed up first
    so JIT compilation stays out of the clock.  With repeats > 1 the best of
    the repeats is reported (standard jitter control for short measurements).
    """
    if n < 2 or length < 8:
        raise ValueError("need n >= 2 and length >= 8")
    X = random_walks(n, length, seed)
    distance.warmup_kernels()
    radius = max(1, int(math.floor(r_frac * length)))

    dtw_seconds = _time_best(
        lambda: distance.pairwise(X, distance.KIND_DTW, distance.WarpBand(None), workers=workers),
        repeats,
    )
    lb_seconds = _time_best(
        lambda: distance.pairwise(X, distance.KIND_LBKEOGH, distance.WarpBand(radius), workers=workers),
        repeats,
    )

    return BenchReport(
        n=n,
        length=length,
        radius=radius,
        workers=workers,
        dtw_seconds=dtw_seconds,
        lb_seconds=lb_seconds,
        speedup=dtw_seconds / lb_seconds,
    )


def bench_csv_rows(reports: list[BenchReport]) -> str:
    """CSV of per-(n, L) rows for external plotting."""
    lines = ["n,length,radius,workers,dtw_seconds,lb_seconds,speedup"]
    for r in reports:
        lines.append(
            f"{r.n},{r.length},{r.radius},{r.workers},"
            f"{r.dtw_seconds:.6f},{r.lb_seconds:.6f},{r.speedup:.3f}"
        )
    return "\n".join(lines) + "\n"
