#!/usr/bin/env python3
"""Write a two-class warped-bump dataset in UCR format for quick experiments."""

import argparse

from lbsimtsc import data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--len", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--out", default="synthetic.tsv")
    args = ap.parse_args()

    d = data.synthetic_bumps(args.n, args.len, seed=args.seed, noise=args.noise)
    data.write_ucr(d, args.out)
    print(f"wrote {args.out}: {d.n} instances, length {d.length}, {d.n_classes} classes")


if __name__ == "__main__":
    main()
