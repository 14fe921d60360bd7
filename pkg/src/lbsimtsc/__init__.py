"""Semi-supervised time-series classification over lower-bound warping graphs.

Pairwise LB_Keogh distances (a cheap lower bound of DTW) drive a sparse
row-stochastic batch graph; a residual 1-D conv backbone plus graph
convolution classifies under a transductive protocol with beta labeled
instances per class.  The package also ships the 1NN-DTW baseline, a
DTW-matrix mode, a graph-construction benchmark, and Wilcoxon signed-rank
comparison of paired accuracy columns.
"""

from .data import Dataset, SemiSplit, build_semi_split, load_ucr, make_semi_split, split_train_test
from .distance import (
    DistanceMatrix,
    Envelope,
    WarpBand,
    dtw,
    envelope,
    lb_keogh,
    load_matrix,
    pairwise,
    save_matrix,
)
from .evaluation import BenchReport, PairedResults, accuracy, bench_graph_construction, wilcoxon
from .graph import BatchGraph, GraphConfig, build_graph, select_neighbors, to_similarity
from .net import AdamState, Model, TrainConfig, adam_step, load_checkpoint, save_checkpoint, softmax_xent
from .pipeline import BatchSample, RunManifest, one_nn_dtw, predict, sample_batch, train

__all__ = [
    "AdamState",
    "BatchGraph",
    "BatchSample",
    "BenchReport",
    "Dataset",
    "DistanceMatrix",
    "Envelope",
    "GraphConfig",
    "Model",
    "PairedResults",
    "RunManifest",
    "SemiSplit",
    "TrainConfig",
    "WarpBand",
    "accuracy",
    "adam_step",
    "bench_graph_construction",
    "build_graph",
    "build_semi_split",
    "dtw",
    "envelope",
    "lb_keogh",
    "load_checkpoint",
    "load_matrix",
    "load_ucr",
    "make_semi_split",
    "one_nn_dtw",
    "pairwise",
    "predict",
    "sample_batch",
    "save_checkpoint",
    "save_matrix",
    "select_neighbors",
    "softmax_xent",
    "split_train_test",
    "to_similarity",
    "train",
    "wilcoxon",
]
