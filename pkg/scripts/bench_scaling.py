#!/usr/bin/env python3
"""Sweep (n, L) and emit construction-time rows as CSV for external plotting."""

import argparse

from lbsimtsc import evaluation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[50, 100])
    ap.add_argument("--len", type=int, nargs="+", default=[128, 256, 512, 1024])
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="bench_scaling.csv")
    args = ap.parse_args()

    reports = []
    for n in args.n:
        for length in args.len:
            rep = evaluation.bench_graph_construction(
                n, length, args.r, workers=args.workers, seed=args.seed, repeats=args.repeats
            )
            reports.append(rep)
            print(f"n={n} L={length}: dtw={rep.dtw_seconds:.2f}s "
                  f"lb={rep.lb_seconds:.4f}s speedup={rep.speedup:.0f}x")
    with open(args.out, "w") as fh:
        fh.write(evaluation.bench_csv_rows(reports))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
