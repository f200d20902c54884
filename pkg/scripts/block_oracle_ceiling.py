#!/usr/bin/env python3
"""Upper bound on planted-partition F1 for any classifier that only sees
block membership.

Replaces the trained embedding with a noisy block-indicator embedding and
runs the same split, featurization and classifier. Compares that against
the trained global embedding and the closed-form bound 2 / (2 + q), where q
is the share of test negatives that fall inside one block.
"""
import argparse
import logging

import numpy as np

from kglinkbench.bench import BenchConfig, make_split, run_global
from kglinkbench.embed import EmbeddingConfig, EmbeddingSpace
from kglinkbench.featclass import edge_feature_matrix, predict_labels, train_classifier
from kglinkbench.graphcore import KnowledgeGraph
from kglinkbench.metrics import confusion, prf1
from kglinkbench.synth import planted_partition


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--block-size", type=int, default=100)
    ap.add_argument("--p-in", type=float, default=0.1)
    ap.add_argument("--p-out", type=float, default=0.01)
    ap.add_argument("--dim", type=int, default=32)
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)

    print("seed  same_block_neg  bound   oracle_f1  trained_f1")
    for seed in range(args.seeds):
        rows, block = planted_partition(2, args.block_size, args.p_in, args.p_out, seed)
        g = KnowledgeGraph.from_labeled(rows)
        cfg = BenchConfig(embedding=EmbeddingConfig(dim=args.dim, epochs=100), seed=seed,
                          relations=("intra",))
        split = make_split(g, cfg)
        r = g.relation_id("intra")
        blk = np.array([block[int(label[1:])] for label in g.entities])

        noise = np.random.default_rng(seed).normal(scale=0.01, size=(g.n_entities, 2))
        oracle = EmbeddingSpace(np.eye(2)[blk] + noise, np.arange(g.n_entities), cfg.embedding)
        train = split.train_pos[r] + split.train_neg[r]
        test = split.test_pos[r] + split.test_neg[r]
        y = np.r_[np.ones(len(split.train_pos[r])), np.zeros(len(split.train_neg[r]))]
        yt = np.r_[np.ones(len(split.test_pos[r])), np.zeros(len(split.test_neg[r]))]
        clf = train_classifier(edge_feature_matrix(oracle, train), y)
        f_oracle = prf1(confusion(predict_labels(clf, edge_feature_matrix(oracle, test)), yt))["f1"]

        q = float(np.mean([blk[t.head] == blk[t.tail] for t in split.test_neg[r]]))
        trained = run_global(g, cfg, split).macro_f1
        print(f"{seed:4d}  {q:14.3f}  {2 / (2 + q):.3f}   {f_oracle:9.3f}  {trained:10.3f}")


if __name__ == "__main__":
    main()
