#!/usr/bin/env python3
"""Mean and standard deviation of curve.csv metrics across seed runs."""
import argparse
import csv
import statistics
from collections import defaultdict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("curves", nargs="+", help="curve.csv files, one per seed")
    ap.add_argument("--metric", default="macro_f1", choices=["macro_f1", "micro_f1"])
    args = ap.parse_args()

    groups = defaultdict(list)
    for path in args.curves:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                groups[(row["mode"], float(row["fraction"]))].append(float(row[args.metric]))

    writer = csv.writer(__import__("sys").stdout, lineterminator="\n")
    writer.writerow(["mode", "fraction", "n_seeds", f"mean_{args.metric}", f"std_{args.metric}"])
    for (mode, frac), vals in sorted(groups.items()):
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        writer.writerow([mode, frac, len(vals), f"{statistics.fmean(vals):.4f}", f"{sd:.4f}"])


if __name__ == "__main__":
    main()
