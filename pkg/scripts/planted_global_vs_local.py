#!/usr/bin/env python3
"""Run the global/local comparison and learning curve on planted-partition
graphs for several seeds, writing one bench directory per seed."""
import argparse
import subprocess
import sys
from pathlib import Path


def run(cmd):
    print("+", " ".join(cmd), flush=True)
    subprocess.run(cmd, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/planted")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--fractions", default="0.1,0.25,0.5,1.0")
    ap.add_argument("--dim", default="32")
    ap.add_argument("--limit-scope", default="classifier_only")
    args = ap.parse_args()

    exe = [sys.executable, "-m", "kglinkbench.cli"]
    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    for seed in range(args.seeds):
        graph = root / f"graph_s{seed}.tsv"
        run(exe + ["synth", "--seed", str(seed), "--out", str(graph)])
        run(exe + ["bench", "--graph", str(graph), "--mode", "both", "--seed", str(seed),
                   "--fractions", args.fractions, "--dim", args.dim,
                   "--limit-scope", args.limit_scope, "--out", str(root / f"s{seed}")])
    print(f"done; aggregate with: python scripts/aggregate_seeds.py {root}/s*/curve.csv")


if __name__ == "__main__":
    main()
