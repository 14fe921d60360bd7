"""Training/inference orchestration and the 1NN-DTW baseline.

The full-dataset distance matrix is computed once and sliced per batch.  Each
training epoch draws one batch: m/2 class-balanced labeled instances plus m/2
uniform draws (with replacement) from the unlabeled and test pools - the test
set is visible without labels (transductive).  Inference runs the test set in
groups of m/2, each paired with m/2 class-balanced labeled anchors; the final
partial group is padded with repeated anchors whose outputs are discarded.

Seed streams (PCG64 SeedSequence spawn keys under the run seed):
(0,) batch sampling, (1,) model init, (2, g) anchors of prediction group g.
Graph rows get their own streams from the graph seed and a batch id; training
uses the epoch number, prediction groups use PREDICT_BATCH_OFFSET + g.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, SemiSplit
from .distance import DistanceMatrix, WarpBand, dtw_cross, pairwise
from .errors import NoSupervision, ShapeError
from .graph import BatchGraph, GraphConfig, build_graph
from .net import AdamState, Model, TrainConfig, adam_step, softmax_xent

PREDICT_BATCH_OFFSET = 2**32  # training epochs stay below this

METHOD_LB = "LB-SimTSC"
METHOD_DTW = "SimTSC-DTW"
METHOD_1NN = "1NN-DTW"


@dataclass
class BatchSample:
    indices: np.ndarray  # (m,) dataset indices
    labeled_mask: np.ndarray  # (m,) bool; exactly m/2 True
    labels: np.ndarray  # (m,) int64; valid only where labeled_mask


@dataclass
class RunManifest:
    dataset: str
    method: str
    beta: int
    seed: int
    alpha: float
    k: int
    r: int | None  # matrix band radius; None = unconstrained
    epochs: int
    matrix_seconds: float = 0.0
    train_seconds: float = 0.0
    accuracy: float | None = None
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    def write(self, path: str | Path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def comparable(self) -> dict:
        """Manifest content with timing fields excluded."""
        out = dict(self.__dict__)
        out.pop("matrix_seconds")
        out.pop("train_seconds")
        return out


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def _balanced_labeled(
    split: SemiSplit, labels: np.ndarray, n_classes: int, half: int, rng: np.random.Generator
) -> np.ndarray:
    """half indices from the labeled pool, classes even up to the remainder.

    Quotas are floor(half/C) per class; the remainder goes to a seeded class
    permutation.  A class pool smaller than its quota is sampled with
    replacement.
    """
    if split.labeled_idx.size == 0:
        raise NoSupervision("labeled pool is empty")
    pools = {
        cls: split.labeled_idx[labels[split.labeled_idx] == cls]
        for cls in range(1, n_classes + 1)
    }
    quota = {cls: half // n_classes for cls in pools}
    bump = rng.permutation(np.arange(1, n_classes + 1))[: half % n_classes]
    for cls in bump:
        quota[int(cls)] += 1
    picks = []
    for cls in range(1, n_classes + 1):
        pool, q = pools[cls], quota[cls]
        if q == 0:
            continue
        if len(pool) == 0:
            raise NoSupervision(f"class {cls} has no labeled instances")
        replace = len(pool) < q
        picks.append(rng.choice(pool, size=q, replace=replace))
    return np.concatenate(picks).astype(np.int64)


def sample_batch(
    split: SemiSplit,
    labels: np.ndarray,
    n_classes: int,
    m: int,
    rng: np.random.Generator,
) -> BatchSample:
    """One training batch: m/2 balanced labeled + m/2 from unlabeled+test pools."""
    if m % 2 != 0:
        raise ValueError("batch size must be even")
    half = m // 2
    lab = _balanced_labeled(split, labels, n_classes, half, rng)
    pool = np.concatenate([split.unlabeled_idx, split.test_idx])
    if pool.size == 0:
        pool = split.labeled_idx  # fully-labeled corner: reuse labeled instances
    unl = rng.choice(pool, size=half, replace=True).astype(np.int64)
    indices = np.concatenate([lab, unl])
    mask = np.zeros(m, dtype=bool)
    mask[:half] = True
    out_labels = np.zeros(m, dtype=np.int64)
    out_labels[:half] = labels[lab]
    return BatchSample(indices, mask, out_labels)


def _batch_graph(
    matrix: DistanceMatrix,
    X: np.ndarray,
    indices: np.ndarray,
    gcfg: GraphConfig,
    batch_id: int,
    recompute: bool,
) -> BatchGraph:
    if recompute:
        # memory-constrained path: per-batch kernel runs give bit-identical
        # values to slicing the precomputed matrix (kernels are pure per pair)
        sub = pairwise(X[indices], matrix.kind, matrix.band).values
    else:
        sub = matrix.values[np.ix_(indices, indices)]
    return build_graph(sub, gcfg, batch_id=batch_id)


def train(
    dataset: Dataset,
    split: SemiSplit,
    matrix: DistanceMatrix,
    gcfg: GraphConfig,
    tcfg: TrainConfig,
    method: str = METHOD_LB,
    dataset_name: str = "",
    recompute_batches: bool = False,
) -> tuple[Model, RunManifest, list[float]]:
    """One-batch-per-epoch training loop; returns (model, manifest, loss history).

    By default the precomputed full-dataset matrix is sliced per batch; with
    recompute_batches the per-batch distances are computed on the fly and the
    matrix argument only carries the kind and band (its values may be empty).
    """
    if not recompute_batches and (matrix.n_rows != dataset.n or matrix.n_cols != dataset.n):
        raise ShapeError(
            f"matrix is {matrix.n_rows}x{matrix.n_cols}, dataset has {dataset.n} instances"
        )
    if dataset.y is None:
        raise NoSupervision("dataset has no labels")
    model = Model(dataset.n_classes, seed=tcfg.seed)
    state = AdamState()
    batch_rng = _stream(tcfg.seed, 0)
    losses: list[float] = []
    t0 = time.perf_counter()
    for epoch in range(tcfg.epochs):
        batch = sample_batch(split, dataset.y, dataset.n_classes, tcfg.batch_size, batch_rng)
        g = _batch_graph(matrix, dataset.X, batch.indices, gcfg, epoch, recompute_batches)
        logits = model.forward(dataset.X[batch.indices], g.as_matrix(), train=True)
        loss, _, glogits = softmax_xent(logits, batch.labels, batch.labeled_mask)
        model.zero_grads()
        model.backward(glogits)
        adam_step(model.parameters(), model.gradients(), state, tcfg.lr, tcfg.weight_decay)
        losses.append(loss)
    train_seconds = time.perf_counter() - t0
    manifest = RunManifest(
        dataset=dataset_name,
        method=method,
        beta=split.beta,
        seed=tcfg.seed,
        alpha=gcfg.alpha,
        k=gcfg.k,
        r=matrix.band.radius,
        epochs=tcfg.epochs,
        train_seconds=train_seconds,
        config={
            "batch_size": tcfg.batch_size,
            "lr": tcfg.lr,
            "weight_decay": tcfg.weight_decay,
            "matrix_kind": matrix.kind,
            "graph_seed": gcfg.seed,
            "exclude_self": gcfg.exclude_self,
            "inference": "anchored-batches",
            "label_map": {str(k): v for k, v in dataset.label_map.items()},
        },
    )
    return model, manifest, losses


def predict(
    model: Model,
    dataset: Dataset,
    split: SemiSplit,
    matrix: DistanceMatrix,
    gcfg: GraphConfig,
    m: int,
    seed: int,
    recompute_batches: bool = False,
) -> np.ndarray:
    """Class prediction for every test index, in split.test_idx order."""
    if m % 2 != 0:
        raise ValueError("batch size must be even")
    half = m // 2
    test = split.test_idx
    preds = np.zeros(test.size, dtype=np.int64)
    labels = dataset.y
    for g_i, start in enumerate(range(0, test.size, half)):
        chunk = test[start : start + half]
        rng = _stream(seed, 2, g_i)
        anchors = _balanced_labeled(split, labels, dataset.n_classes, half, rng)
        pad = half - chunk.size
        padding = anchors[np.arange(pad) % anchors.size] if pad else np.empty(0, dtype=np.int64)
        indices = np.concatenate([anchors, chunk, padding])
        g = _batch_graph(
            matrix, dataset.X, indices, gcfg, PREDICT_BATCH_OFFSET + g_i, recompute_batches
        )
        logits = model.forward(dataset.X[indices], g.as_matrix(), train=False)
        rows = logits[half : half + chunk.size]
        preds[start : start + chunk.size] = rows.argmax(axis=1) + 1
    return preds


def one_nn_dtw(
    train_X: np.ndarray,
    train_y: np.ndarray,
    test_X: np.ndarray,
    band: WarpBand | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Label of the minimum-DTW labeled neighbor; ties go to the lowest index."""
    train_X = np.asarray(train_X, dtype=np.float64)
    if train_X.shape[0] < 1:
        raise NoSupervision("need at least one labeled instance")
    if band is None:
        band = WarpBand(min(train_X.shape[1] - 1, 100))  # min(L, 100) rule, pre-clamped
    d = dtw_cross(np.asarray(test_X, dtype=np.float64), train_X, band, workers=workers)
    nearest = d.argmin(axis=1)
    return np.asarray(train_y, dtype=np.int64)[nearest]
