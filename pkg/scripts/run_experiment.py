#!/usr/bin/env python3
"""Full desk-scale experiment on one UCR-format file.

Precomputes both distance matrices, trains the LB-graph classifier and the
DTW-matrix variant across seeds, runs the 1NN-DTW baseline, then compares the
two score columns per method pair with the signed-rank test.  All manifests
land in --outdir.
"""

import argparse
import json
import time
from pathlib import Path

from lbsimtsc import data, distance, evaluation, net, pipeline
from lbsimtsc.graph import GraphConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True)
    ap.add_argument("--outdir", default="runs")
    ap.add_argument("--beta", type=int, default=10)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = Path(args.data).stem
    d = data.load_ucr(args.data)
    print(f"{name}: n={d.n} L={d.length} C={d.n_classes}")

    matrices = {}
    for kind, band in (
        (distance.KIND_LBKEOGH, distance.WarpBand.from_fraction(args.r, d.length)),
        (distance.KIND_DTW, distance.WarpBand(None)),
    ):
        t0 = time.perf_counter()
        m = matrices[kind] = distance.pairwise(d, kind, band, workers=args.workers)
        secs = time.perf_counter() - t0
        distance.save_matrix(m, outdir / f"{name}.{kind}.lbdm")
        print(f"{kind} matrix: {secs:.1f}s")
        matrices[kind + ".seconds"] = secs

    scores = {"LB-SimTSC": [], "SimTSC-DTW": [], "1NN-DTW": []}
    for seed in args.seeds:
        split = data.build_semi_split(d, 0.8, args.beta, seed)
        for method, kind, alpha in (
            (pipeline.METHOD_LB, distance.KIND_LBKEOGH, 11.0),
            (pipeline.METHOD_DTW, distance.KIND_DTW, 0.3),
        ):
            gcfg = GraphConfig(alpha=alpha, k=args.k, seed=seed)
            tcfg = net.TrainConfig(batch_size=args.batch, epochs=args.epochs, seed=seed)
            model, man, _ = pipeline.train(d, split, matrices[kind], gcfg, tcfg,
                                           method=method, dataset_name=name)
            preds = pipeline.predict(model, d, split, matrices[kind], gcfg, args.batch, seed)
            man.accuracy = evaluation.accuracy(preds, d.y[split.test_idx])
            man.matrix_seconds = matrices[kind + ".seconds"]
            man.write(outdir / f"{name}.{method}.beta{args.beta}.seed{seed}.json")
            scores[method].append(man.accuracy)
            print(f"seed {seed} {method}: {man.accuracy:.4f}")

        nn_preds = pipeline.one_nn_dtw(
            d.X[split.labeled_idx], d.y[split.labeled_idx], d.X[split.test_idx],
            workers=args.workers,
        )
        nn_acc = evaluation.accuracy(nn_preds, d.y[split.test_idx])
        scores["1NN-DTW"].append(nn_acc)
        print(f"seed {seed} 1NN-DTW: {nn_acc:.4f}")

    summary = {m: sum(v) / len(v) for m, v in scores.items()}
    pairs = evaluation.PairedResults(
        ("1NN-DTW", "LB-SimTSC"),
        [(f"seed{s}", a, b) for s, (a, b) in enumerate(zip(scores["1NN-DTW"], scores["LB-SimTSC"]))],
    )
    try:
        summary["p_lb_vs_1nn_one_sided"] = evaluation.wilcoxon(pairs, evaluation.ONE_SIDED_B_GREATER)
    except Exception as e:  # few seeds can make every difference zero
        summary["p_lb_vs_1nn_one_sided"] = f"degenerate: {e}"
    (outdir / f"{name}.summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
