#!/usr/bin/env python3
"""Train four losses on moderate-overlap blobs and compare class separation.

Usage:
    python scripts/run_class_separation.py [--seeds 5] [--out r2.csv]

Prints per-loss R2 of the train-split penultimate features (mean over
seeds with standard error) and checks the adjacent gaps in the order
softmax < label smoothing < cosine softmax < squared error.
"""

import argparse
import csv
import sys

import numpy as np

from losslab.experiments import separation_experiment

# weakest collapse first; gaps are checked pairwise along this order
ORDER = ("softmax", "label_smoothing", "cosine_softmax", "squared_error")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5,
                        help="number of training seeds per loss")
    parser.add_argument("--index", default="cosine",
                        choices=("cosine", "euclidean", "centroid"))
    parser.add_argument("--out", help="optional CSV of per-seed R2 values")
    args = parser.parse_args(argv)

    results = separation_experiment(seeds=tuple(range(args.seeds)),
                                    index=args.index)
    means = {k: float(v.mean()) for k, v in results.items()}
    errs = {
        k: float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
        for k, v in results.items()
    }

    print(f"{'loss':<18} {'R2 mean':>9} {'stderr':>8}  per-seed")
    for name in ORDER:
        per_seed = " ".join(f"{r:.4f}" for r in results[name])
        print(f"{name:<18} {means[name]:>9.4f} {errs[name]:>8.4f}  {per_seed}")

    ok = True
    for lo, hi in zip(ORDER, ORDER[1:]):
        gap = means[hi] - means[lo]
        pooled = float(np.hypot(errs[hi], errs[lo]))
        good = gap > pooled
        ok &= good
        print(f"{hi} - {lo}: gap={gap:.4f} pooled_se={pooled:.4f} "
              f"{'ok' if good else 'NOT SEPARATED'}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["loss", "seed", "r2"])
            for name in ORDER:
                for seed, r2 in enumerate(results[name]):
                    writer.writerow([name, seed, f"{r2:.10g}"])
        print(f"wrote {args.out}")

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
