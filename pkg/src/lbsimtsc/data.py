"""Dataset ingestion and the semi-supervised split protocol.

A dataset is a dense (n, L) float64 matrix of equal-length series plus an
optional label vector with contiguous class ids 1..C.  Splits are pure
functions of (input, seed): the shuffle is an explicit Fisher-Yates walk over
a PCG64 stream, so the same seed gives byte-identical splits on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyData,
    InsufficientLabels,
    ParseError,
    RaggedData,
)


@dataclass
class Dataset:
    """Equal-length series with optional contiguous class labels.

    X: (n, L) float64.  y: (n,) int64 with values in {1..C}, or None when the
    instances are unlabeled.  label_map records the raw-file label for each
    contiguous class id (class id -> raw label), for reporting.
    """

    X: np.ndarray
    y: np.ndarray | None = None
    n_classes: int = 0
    label_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] < 1:
            raise ValueError("X must be (n, L) with L >= 1")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("series values must be finite")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape != (self.X.shape[0],):
                raise ValueError("labels must be one per instance")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def length(self) -> int:
        return self.X.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        y = None if self.y is None else self.y[idx]
        return Dataset(self.X[idx], y, self.n_classes, dict(self.label_map))


@dataclass
class SemiSplit:
    """Disjoint labeled / unlabeled / test index sets over one dataset.

    Indices refer to the dataset the split was built for.  beta is the number
    of labeled instances kept per class.
    """

    labeled_idx: np.ndarray
    unlabeled_idx: np.ndarray
    test_idx: np.ndarray
    beta: int
    seed: int

    def __post_init__(self):
        self.labeled_idx = np.asarray(self.labeled_idx, dtype=np.int64)
        self.unlabeled_idx = np.asarray(self.unlabeled_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)

    def validate(self, n: int):
        parts = [self.labeled_idx, self.unlabeled_idx, self.test_idx]
        merged = np.concatenate(parts)
        if len(np.unique(merged)) != len(merged):
            raise ValueError("split index sets overlap")
        if sorted(merged.tolist()) != list(range(n)):
            raise ValueError("split does not cover the dataset")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Explicit Fisher-Yates so the permutation is pinned to the PCG64 draws."""
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _parse_line(line: str, delimiter: str, line_no: int) -> list[float]:
    fields = line.split(delimiter)
    out = []
    for col_no, tok in enumerate(fields, start=1):
        tok = tok.strip()
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(line_no, col_no) from None
        if not math.isfinite(v):
            raise ParseError(line_no, col_no, "non-finite value")
        out.append(v)
    return out


def load_ucr(path: str | Path, delimiter: str = "auto") -> Dataset:
    """Read a UCR-format file: one instance per line, class label first.

    Tab or comma delimited; with delimiter="auto" the separator is detected on
    the first non-empty line.  Raw labels may be any integers; they are
    remapped to contiguous 1..C preserving the sorted order of raw labels.
    """
    text = Path(path).read_text()
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise EmptyData(f"{path}: no data rows")

    if delimiter == "auto":
        first = lines[0][1]
        delimiter = "\t" if "\t" in first else ","
    elif delimiter == "tab":
        delimiter = "\t"
    elif delimiter == "comma":
        delimiter = ","

    raw_labels: list[int] = []
    rows: list[list[float]] = []
    width = None
    for line_no, ln in lines:
        values = _parse_line(ln, delimiter, line_no)
        if width is None:
            width = len(values)
            if width < 2:
                raise ParseError(line_no, 2, "missing series values")
        elif len(values) != width:
            raise RaggedData(line_no)
        lbl = values[0]
        if abs(lbl - round(lbl)) > 1e-9:
            raise ParseError(line_no, 1, "class label is not integer-like")
        raw_labels.append(int(round(lbl)))
        rows.append(values[1:])

    uniq = sorted(set(raw_labels))
    remap = {raw: k + 1 for k, raw in enumerate(uniq)}
    y = np.array([remap[r] for r in raw_labels], dtype=np.int64)
    X = np.array(rows, dtype=np.float64)
    label_map = {k + 1: raw for k, raw in enumerate(uniq)}
    return Dataset(X, y, n_classes=len(uniq), label_map=label_map)


def znormalize(d: Dataset) -> Dataset:
    """Per-instance z-normalization; constant series are zeroed."""
    mu = d.X.mean(axis=1, keepdims=True)
    sd = d.X.std(axis=1, keepdims=True)
    sd[sd == 0.0] = 1.0
    return Dataset((d.X - mu) / sd, d.y, d.n_classes, dict(d.label_map))


def split_indices(n: int, train_frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Permute 0..n-1 and cut at ceil(train_frac * n)."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    perm = _fisher_yates(n, _rng(seed))
    cut = math.ceil(train_frac * n)
    if cut == 0 or cut == n:
        raise DegenerateSplit(f"n={n}, train_frac={train_frac} leaves one side empty")
    return perm[:cut], perm[cut:]


def split_train_test(d: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(d.n, train_frac, seed)
    return d.subset(train_idx), d.subset(test_idx)


def make_semi_split(train: Dataset, beta: int, seed: int) -> SemiSplit:
    """Sample beta labeled instances per class; the rest become unlabeled.

    Indices are relative to `train`; test_idx is left empty for the caller to
    fill (see build_semi_split for the full-dataset version).
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if train.y is None:
        raise ValueError("train dataset must be labeled")
    rng = _rng(seed)
    labeled: list[np.ndarray] = []
    for cls in range(1, train.n_classes + 1):
        pool = np.flatnonzero(train.y == cls)
        if len(pool) < beta:
            raise InsufficientLabels(cls, len(pool), beta)
        pick = rng.choice(pool, size=beta, replace=False)
        labeled.append(np.sort(pick))
    labeled_idx = np.concatenate(labeled)
    mask = np.ones(train.n, dtype=bool)
    mask[labeled_idx] = False
    return SemiSplit(
        labeled_idx=labeled_idx,
        unlabeled_idx=np.flatnonzero(mask),
        test_idx=np.empty(0, dtype=np.int64),
        beta=beta,
        seed=seed,
    )


def build_semi_split(d: Dataset, train_frac: float, beta: int, seed: int) -> SemiSplit:
    """80/20-style split plus per-class label sampling, in full-dataset indices."""
    train_idx, test_idx = split_indices(d.n, train_frac, seed)
    inner = make_semi_split(d.subset(train_idx), beta, seed)
    return SemiSplit(
        labeled_idx=train_idx[inner.labeled_idx],
        unlabeled_idx=train_idx[inner.unlabeled_idx],
        test_idx=test_idx,
        beta=beta,
        seed=seed,
    )


def synthetic_bumps(n: int, length: int, seed: int, noise: float = 0.05) -> Dataset:
    """Two-class toy set: a Gaussian bump at a random position vs flat noise.

    The bump position varies per instance, so class similarity is a warping
    question; class 2 is noise only.  Balanced classes, alternating order.
    """
    rng = _rng(seed)
    X = rng.normal(0.0, noise, size=(n, length))
    y = np.empty(n, dtype=np.int64)
    t = np.arange(length, dtype=np.float64)
    width = length / 16.0
    for i in range(n):
        y[i] = 1 + i % 2
        if y[i] == 1:
            center = rng.uniform(0.2 * length, 0.8 * length)
            X[i] += np.exp(-0.5 * ((t - center) / width) ** 2)
    return Dataset(X, y, n_classes=2, label_map={1: 1, 2: 2})


def write_ucr(d: Dataset, path: str | Path, delimiter: str = "\t"):
    """Write a dataset back out in UCR format (label first, full precision)."""
    with open(path, "w") as fh:
        for i in range(d.n):
            lbl = d.label_map.get(int(d.y[i]), int(d.y[i])) if d.y is not None else 0
            fields = [str(int(lbl))] + [repr(float(v)) for v in d.X[i]]
            fh.write(delimiter.join(fields) + "\n")
