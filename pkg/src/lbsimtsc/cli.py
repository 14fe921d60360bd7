"""Command-line surface.

Subcommands: dist, graph-dump, train, predict, baseline, bench, wilcoxon.
Exit codes: 0 success, 1 usage error, 2 data error.  Matrix precomputation is
a separate subcommand so the expensive step is cached on disk and shared
between runs.  LBSIMTSC_WORKERS sets the default worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import data, distance, evaluation, graph, net, pipeline
from .errors import KindMismatch, LbsimtscError

DEFAULT_ALPHA = {pipeline.METHOD_LB: 11.0, pipeline.METHOD_DTW: 0.3}
DEFAULT_K = 3
DEFAULT_R_FRAC = 0.05
METHOD_FLAGS = {"lb-simtsc": pipeline.METHOD_LB, "simtsc-dtw": pipeline.METHOD_DTW}
METHOD_KIND = {pipeline.METHOD_LB: distance.KIND_LBKEOGH, pipeline.METHOD_DTW: distance.KIND_DTW}


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (argparse default is 2, which we reserve for data errors)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_workers() -> int:
    env = os.environ.get("LBSIMTSC_WORKERS", "")
    try:
        if env:
            return max(1, int(env))
    except ValueError:
        pass
    return os.cpu_count() or 1


def _band_from_flag(r: float, length: int) -> distance.WarpBand:
    """--r semantics: 0 = unconstrained, (0,1) = fraction of L, >=1 = absolute."""
    if r == 0:
        return distance.WarpBand(None)
    if r < 1:
        return distance.WarpBand.from_fraction(r, length)
    return distance.WarpBand(int(r))


def _load_dataset(args) -> data.Dataset:
    d = data.load_ucr(args.data, delimiter=args.delimiter)
    if getattr(args, "znorm", False):
        d = data.znormalize(d)
    return d


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="UCR-format TSV/CSV file")
    p.add_argument("--delimiter", choices=["auto", "tab", "comma"], default="auto")
    p.add_argument("--znorm", action="store_true", help="per-instance z-normalization")


def _add_split_flags(p):
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--beta", type=int, required=True, help="labeled instances per class")
    p.add_argument("--seed", type=int, default=0)


def _cmd_dist(args) -> int:
    d = _load_dataset(args)
    band = _band_from_flag(args.r, d.length)
    t0 = time.perf_counter()
    m = distance.pairwise(d, args.kind, band, workers=args.workers)
    seconds = time.perf_counter() - t0
    distance.save_matrix(m, args.out)
    manifest = pipeline.RunManifest(
        dataset=Path(args.data).stem,
        method=args.kind,
        beta=0,
        seed=0,
        alpha=0.0,
        k=0,
        r=m.band.radius,
        epochs=0,
        matrix_seconds=seconds,
        config={"workers": args.workers, "n": d.n, "length": d.length},
    )
    manifest.write(str(args.out) + ".json")
    print(f"wrote {args.out}: {m.n_rows}x{m.n_cols} {m.kind} matrix in {seconds:.2f}s")
    return 0


def _cmd_graph_dump(args) -> int:
    m = distance.load_matrix(args.matrix)
    if args.indices:
        idx = np.array([int(t) for t in args.indices.split(",")], dtype=np.int64)
    else:
        idx = np.arange(min(args.first, m.n_rows), dtype=np.int64)
    sub = m.values[np.ix_(idx, idx)]
    cfg = graph.GraphConfig(alpha=args.alpha, k=args.k, seed=args.seed)
    g = graph.build_graph(sub, cfg, batch_id=args.batch_id)
    text = g.dump_json(cfg)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _prepare_run(args):
    d = _load_dataset(args)
    method = METHOD_FLAGS[args.method]
    kind = METHOD_KIND[method]
    if args.matrix:
        m = distance.load_matrix(args.matrix)
        if m.kind != kind:
            raise KindMismatch(
                f"method {args.method} needs a {kind} matrix, got {m.kind}"
            )
    elif args.recompute_batches:
        # memory-constrained path: no full matrix on disk, distances per batch
        r = args.r if args.r is not None else (DEFAULT_R_FRAC if kind == distance.KIND_LBKEOGH else 0.0)
        m = distance.matrix_descriptor(kind, _band_from_flag(r, d.length))
    else:
        raise KindMismatch("need --matrix (or --recompute-batches to skip precomputation)")
    split = data.build_semi_split(d, args.train_frac, args.beta, args.seed)
    alpha = args.alpha if args.alpha is not None else DEFAULT_ALPHA[method]
    gcfg = graph.GraphConfig(alpha=alpha, k=args.k, seed=args.seed)
    return d, m, method, split, gcfg


def _cmd_train(args) -> int:
    d, m, method, split, gcfg = _prepare_run(args)
    tcfg = net.TrainConfig(
        batch_size=args.batch, epochs=args.epochs, lr=args.lr,
        weight_decay=args.weight_decay, seed=args.seed,
    )
    model, manifest, _ = pipeline.train(
        d, split, m, gcfg, tcfg, method=method, dataset_name=Path(args.data).stem,
        recompute_batches=args.recompute_batches,
    )
    if tcfg.epochs > 0 and split.test_idx.size > 0:
        preds = pipeline.predict(model, d, split, m, gcfg, tcfg.batch_size, tcfg.seed,
                                 recompute_batches=args.recompute_batches)
        manifest.accuracy = evaluation.accuracy(preds, d.y[split.test_idx])
    manifest.write(args.out)
    if args.ckpt:
        net.save_checkpoint(args.ckpt, model.state())
    acc = "n/a" if manifest.accuracy is None else f"{manifest.accuracy:.4f}"
    print(f"{method} beta={args.beta} seed={args.seed}: accuracy={acc} ({manifest.train_seconds:.1f}s)")
    return 0


def _cmd_predict(args) -> int:
    d, m, method, split, gcfg = _prepare_run(args)
    model = net.Model(d.n_classes, seed=args.seed)
    model.load_state(net.load_checkpoint(args.ckpt))
    preds = pipeline.predict(model, d, split, m, gcfg, args.batch, args.seed,
                             recompute_batches=args.recompute_batches)
    manifest = pipeline.RunManifest(
        dataset=Path(args.data).stem,
        method=method,
        beta=args.beta,
        seed=args.seed,
        alpha=gcfg.alpha,
        k=gcfg.k,
        r=m.band.radius,
        epochs=0,
        config={"checkpoint": str(args.ckpt)},
    )
    if d.y is not None:
        manifest.accuracy = evaluation.accuracy(preds, d.y[split.test_idx])
    report = dict(manifest.__dict__)
    report["test_idx"] = split.test_idx.tolist()
    report["predictions"] = preds.tolist()
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    print(f"predicted {preds.size} test instances -> {args.out}")
    return 0


def _cmd_baseline(args) -> int:
    if args.method != "1nn-dtw":
        raise KindMismatch(f"unknown baseline {args.method}")
    d = _load_dataset(args)
    split = data.build_semi_split(d, args.train_frac, args.beta, args.seed)
    # min(L, 100) default, pre-clamped to the valid radius range
    band = distance.WarpBand(min(d.length - 1, 100)) if args.band is None else _band_from_flag(args.band, d.length)
    t0 = time.perf_counter()
    preds = pipeline.one_nn_dtw(
        d.X[split.labeled_idx], d.y[split.labeled_idx], d.X[split.test_idx],
        band, workers=args.workers,
    )
    seconds = time.perf_counter() - t0
    acc = evaluation.accuracy(preds, d.y[split.test_idx])
    manifest = pipeline.RunManifest(
        dataset=Path(args.data).stem,
        method=pipeline.METHOD_1NN,
        beta=args.beta,
        seed=args.seed,
        alpha=0.0,
        k=1,
        r=band.resolve(d.length),
        epochs=0,
        train_seconds=seconds,
        accuracy=acc,
        config={"workers": args.workers},
    )
    manifest.write(args.out)
    print(f"1NN-DTW beta={args.beta} seed={args.seed}: accuracy={acc:.4f}")
    return 0


def _cmd_bench(args) -> int:
    report = evaluation.bench_graph_construction(
        args.n, args.len, args.r, workers=args.workers, seed=args.seed
    )
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.csv:
        Path(args.csv).write_text(evaluation.bench_csv_rows([report]))
    print(report.to_json())
    return 0


def _cmd_wilcoxon(args) -> int:
    pairs = evaluation.PairedResults.from_csv(args.csv)
    side = evaluation.ONE_SIDED_B_GREATER if args.side == "one" else evaluation.TWO_SIDED
    p = evaluation.wilcoxon(pairs, side)
    print(f"p={p:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps({"p": p, "side": side, "n_pairs": len(pairs.scores)}) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lbsimtsc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="precompute a pairwise distance matrix")
    p.add_argument("--in", "--data", dest="data", required=True,
                   help="UCR-format TSV/CSV file")
    p.add_argument("--delimiter", choices=["auto", "tab", "comma"], default="auto")
    p.add_argument("--znorm", action="store_true", help="per-instance z-normalization")
    p.add_argument("--kind", choices=[distance.KIND_LBKEOGH, distance.KIND_DTW], required=True)
    p.add_argument("--r", type=float, default=DEFAULT_R_FRAC,
                   help="band: 0=unconstrained, <1 fraction of L, >=1 absolute")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("graph-dump", help="debug-dump one batch graph as JSON")
    p.add_argument("--matrix", required=True)
    p.add_argument("--first", type=int, default=16, help="use the leading m x m block")
    p.add_argument("--indices", help="comma-separated dataset indices (overrides --first)")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA[pipeline.METHOD_LB])
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-id", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_graph_dump)

    for name, fn in (("train", _cmd_train), ("predict", _cmd_predict)):
        p = sub.add_parser(name, help=f"{name} with a precomputed matrix")
        _add_data_flags(p)
        _add_split_flags(p)
        p.add_argument("--matrix", help="precomputed .lbdm (omit only with --recompute-batches)")
        p.add_argument("--recompute-batches", action="store_true",
                       help="compute each batch's distances on the fly instead of slicing")
        p.add_argument("--r", type=float, default=None,
                       help="band for --recompute-batches without a matrix (same semantics as dist)")
        p.add_argument("--method", choices=sorted(METHOD_FLAGS), default="lb-simtsc")
        p.add_argument("--alpha", type=float, default=None,
                       help="similarity scaling (default 11 for lb-simtsc, 0.3 for simtsc-dtw)")
        p.add_argument("--k", type=int, default=DEFAULT_K)
        p.add_argument("--batch", type=int, default=128)
        p.add_argument("--out", required=True)
        if name == "train":
            p.add_argument("--epochs", type=int, default=500)
            p.add_argument("--lr", type=float, default=1e-4)
            p.add_argument("--weight-decay", type=float, default=4e-3)
            p.add_argument("--ckpt")
        else:
            p.add_argument("--ckpt", required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("baseline", help="run a baseline classifier")
    _add_data_flags(p)
    _add_split_flags(p)
    p.add_argument("--method", default="1nn-dtw")
    p.add_argument("--band", type=float, default=None,
                   help="DTW band (default min(L, 100)); 0=unconstrained")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_baseline)

    p = sub.add_parser("bench", help="time pairwise DTW vs LB_Keogh construction")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--len", type=int, default=1024)
    p.add_argument("--r", type=float, default=DEFAULT_R_FRAC)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("wilcoxon", help="signed-rank test over a CSV of score pairs")
    p.add_argument("--csv", required=True, help="rows: dataset,score_a,score_b")
    p.add_argument("--side", choices=["one", "two"], required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_wilcoxon)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except LbsimtscError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
