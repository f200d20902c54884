"""Planted-partition graphs for sanity benchmarks.

Entities ``e0 .. e{n-1}`` are split into equal consecutive blocks. Each
unordered pair i < j becomes the triple (e_i, intra, e_j) with probability
``p_in`` when both lie in the same block, and (e_i, inter, e_j) with
probability ``p_out`` otherwise.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from kglinkbench.seeding import rng_for

INTRA = "intra"
INTER = "inter"


def planted_partition(n_blocks: int, block_size: int, p_in: float, p_out: float, seed: int = 0):
    """Return (label triples, block of each entity)."""
    if n_blocks < 2:
        raise ValueError(f"need at least 2 blocks, got {n_blocks}")
    if block_size < 2:
        raise ValueError(f"need at least 2 nodes per block, got {block_size}")
    if p_in == 0 and p_out == 0:
        raise ValueError("empty graph: p_in and p_out are both 0")
    if not (0.0 < p_in <= 1.0):
        raise ValueError(f"p_in must lie in (0, 1], got {p_in}")
    if not (0.0 <= p_out <= 1.0):
        raise ValueError(f"p_out must lie in [0, 1], got {p_out}")

    n = n_blocks * block_size
    block = np.arange(n) // block_size
    rng = rng_for(seed, "synth")
    iu, ju = np.triu_indices(n, k=1)
    draw = rng.random(iu.shape[0])
    same = block[iu] == block[ju]
    hit = np.where(same, draw < p_in, draw < p_out)
    rows = [
        (f"e{i}", INTRA if s else INTER, f"e{j}")
        for i, j, s in zip(iu[hit].tolist(), ju[hit].tolist(), same[hit].tolist())
    ]
    if not rows:
        raise ValueError("empty graph: no edges were sampled")
    return rows, block


def write_tsv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in rows:
            fh.write(f"{h}\t{r}\t{t}\n")
    return path
