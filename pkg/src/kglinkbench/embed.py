"""Entity embeddings trained by SGD with a logistic negative-sampling loss.

For a positive pair (h, t) with negatives t'_1..t'_k the per-example loss is

    L = -log sigma(v_h . v_t) - sum_j log sigma(-v_h . v_t'_j)

and each example takes one SGD step on v_h, v_t and every v_t'_j, with
gradients evaluated at the pre-step vectors. The learning rate decays
linearly from ``lr0`` to ``lr0 / 100`` over all updates. Relations are
ignored: the embedding is relation-agnostic.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from kglinkbench.errors import TrainingDivergedError
from kglinkbench.seeding import rng_for

LR_FLOOR_DIVISOR = 100.0

# The bundled TBB is too old for numba; prefer OpenMP for the parallel kernel.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 64
    epochs: int = 100
    lr0: float = 0.05
    neg_k: int = 5
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr0 > 0:
            raise ValueError(f"lr0 must be > 0, got {self.lr0}")
        if self.neg_k < 1:
            raise ValueError(f"neg_k must be >= 1, got {self.neg_k}")


@dataclass(frozen=True, eq=False)
class EmbeddingSpace:
    """Row ``i`` of ``vectors`` embeds entity ``entity_ids[i]``."""

    vectors: np.ndarray
    entity_ids: np.ndarray
    config: EmbeddingConfig
    final_loss: float = float("nan")
    loss_history: tuple[float, ...] = ()
    labels: tuple[str, ...] | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.float64, copy=True)
        ids = np.array(self.entity_ids, dtype=np.int64, copy=True)
        if vec.ndim != 2 or vec.shape[0] != ids.shape[0]:
            raise ValueError("vectors must be a matrix with one row per entity id")
        vec.flags.writeable = False
        ids.flags.writeable = False
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "entity_ids", ids)
        object.__setattr__(self, "_index", {int(e): i for i, e in enumerate(ids)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def __contains__(self, entity) -> bool:
        return int(entity) in self._index

    def row(self, entity) -> int:
        try:
            return self._index[int(entity)]
        except KeyError:
            raise KeyError(f"entity {entity} has no embedding") from None

    def vector(self, entity) -> np.ndarray:
        return self.vectors[self.row(entity)]

    def relabel(self, entity_ids, labels=None) -> "EmbeddingSpace":
        return EmbeddingSpace(self.vectors, entity_ids, self.config, self.final_loss,
                              self.loss_history, labels)


@numba.njit(cache=True)
def sigmoid(x):
    # Clamped so the result stays strictly inside (0, 1) in float64.
    if x >= 0.0:
        s = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        s = e / (1.0 + e)
    return min(max(s, 2.2250738585072014e-308), 0.9999999999999999)


@numba.njit(cache=True)
def log1p_exp_neg(x):
    """-log sigma(x), computed without overflow."""
    if x >= 0.0:
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


@numba.njit(cache=True)
def sgns_loss(vh, vt, vneg):
    loss = log1p_exp_neg(np.dot(vh, vt))
    for j in range(vneg.shape[0]):
        loss += log1p_exp_neg(-np.dot(vh, vneg[j]))
    return loss


@numba.njit(cache=True)
def sgns_grad(vh, vt, vneg):
    """Loss and gradients w.r.t. v_h, v_t and each negative vector."""
    s = np.dot(vh, vt)
    loss = log1p_exp_neg(s)
    coef = 1.0 - sigmoid(s)
    gh = -coef * vt
    gt = -coef * vh
    gneg = np.empty_like(vneg)
    for j in range(vneg.shape[0]):
        sj = np.dot(vh, vneg[j])
        loss += log1p_exp_neg(-sj)
        pj = sigmoid(sj)
        gh += pj * vneg[j]
        gneg[j] = pj * vh
    return loss, gh, gt, gneg


@numba.njit(cache=True, nogil=True)
def _sgd_range(W, heads, tails, negs, order, start, stop, step0, total, lr0):
    """Apply SGD steps for ``order[start:stop]``; returns the summed loss."""
    lr_min = lr0 / 100.0
    span = max(total - 1, 1)
    acc = 0.0
    k = negs.shape[1]
    vneg = np.empty((k, W.shape[1]))
    for pos in range(start, stop):
        i = order[pos]
        h = heads[i]
        t = tails[i]
        for j in range(k):
            vneg[j] = W[negs[pos, j]]
        vh = W[h].copy()
        vt = W[t].copy()
        loss, gh, gt, gneg = sgns_grad(vh, vt, vneg)
        acc += loss
        lr = lr0 - (lr0 - lr_min) * (step0 + pos) / span
        W[h] -= lr * gh
        W[t] -= lr * gt
        for j in range(k):
            W[negs[pos, j]] -= lr * gneg[j]
    return acc


@numba.njit(cache=True, parallel=True, nogil=True)
def _sgd_epoch_hogwild(W, heads, tails, negs, order, step0, total, lr0, n_workers):
    # Workers share W without locks; concurrent writes to a row may be lost.
    n = order.shape[0]
    partial = np.zeros(n_workers)
    chunk = (n + n_workers - 1) // n_workers
    for w in numba.prange(n_workers):
        lo = w * chunk
        hi = min(n, lo + chunk)
        if lo < hi:
            partial[w] = _sgd_range(W, heads, tails, negs, order, lo, hi, step0, total, lr0)
    return partial.sum()


def init_embeddings(n_entities: int, config: EmbeddingConfig) -> EmbeddingSpace:
    """Uniform init in [-0.5/d, 0.5/d]."""
    if n_entities < 1:
        raise ValueError(f"n_entities must be >= 1, got {n_entities}")
    bound = 0.5 / config.dim
    rng = rng_for(config.seed, "embed-init")
    W = rng.uniform(-bound, bound, size=(n_entities, config.dim))
    return EmbeddingSpace(W, np.arange(n_entities), config)


def _draw_negatives(rng, pool, tails, k):
    """Uniform draws from ``pool`` with draws equal to the tail redrawn."""
    idx = rng.integers(len(pool), size=(len(tails), k))
    negs = pool[idx]
    bad = negs == tails[:, None]
    while bad.any():
        negs[bad] = pool[rng.integers(len(pool), size=int(bad.sum()))]
        bad = negs == tails[:, None]
    return negs


def train_embeddings(
    train_triples: Sequence,
    n_entities: int,
    config: EmbeddingConfig | None = None,
    negative_entity_pool: Sequence[int] | None = None,
    workers: int | None = None,
) -> EmbeddingSpace:
    """Train embeddings on ``train_triples`` (only heads and tails are used).

    ``negative_entity_pool`` defaults to all ``n_entities`` ids. With
    ``config.deterministic`` updates are strictly sequential and the result
    is bit-reproducible; otherwise ``workers`` threads (default: numba's
    thread count) update the shared matrix lock-free.
    """
    config = config or EmbeddingConfig()
    if len(train_triples) == 0:
        raise ValueError("train_triples must be non-empty")
    arr = np.asarray([(t[0], t[2]) for t in train_triples], dtype=np.int64)
    heads, tails = arr[:, 0].copy(), arr[:, 1].copy()
    if arr.min() < 0 or arr.max() >= n_entities:
        raise ValueError("entity id out of range [0, n_entities)")
    pool = (np.arange(n_entities, dtype=np.int64) if negative_entity_pool is None
            else np.unique(np.asarray(negative_entity_pool, dtype=np.int64)))
    if len(pool) < 2:
        raise ValueError("negative_entity_pool needs at least 2 distinct entities")
    if pool.min() < 0 or pool.max() >= n_entities:
        raise ValueError("negative pool id out of range")
    if workers is None:
        workers = numba.get_num_threads()

    W = np.array(init_embeddings(n_entities, config).vectors)
    rng = rng_for(config.seed, "embed-sgd")
    n = len(heads)
    total = config.epochs * n
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        negs = _draw_negatives(rng, pool, tails[order], config.neg_k)
        step0 = epoch * n
        if config.deterministic or workers <= 1:
            loss = _sgd_range(W, heads, tails, negs, order, 0, n, step0, total, config.lr0)
        else:
            loss = _sgd_epoch_hogwild(W, heads, tails, negs, order, step0, total,
                                      config.lr0, int(workers))
        mean = loss / n
        if not math.isfinite(mean) or not np.isfinite(W).all():
            raise TrainingDivergedError(
                f"non-finite loss or embedding at epoch {epoch + 1} "
                f"(lr0={config.lr0}); try a lower lr0"
            )
        history.append(float(mean))
    return EmbeddingSpace(W, np.arange(n_entities), config, history[-1], tuple(history))


def score(space: EmbeddingSpace, h, t) -> float:
    return float(np.dot(space.vector(h), space.vector(t)))


def export_embeddings(space: EmbeddingSpace, path, extra: dict | None = None) -> list[Path]:
    """TSV rows of (label, d floats) plus a ``.json`` sidecar."""
    path = Path(path)
    labels = space.labels or tuple(str(int(e)) for e in space.entity_ids)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for label, row in zip(labels, space.vectors):
            fh.write(label + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")
    sidecar = path.with_suffix(".json")
    meta = {
        "config": asdict(space.config),
        "dim": space.dim,
        "n_entities": len(space),
        "entity_ids": [int(e) for e in space.entity_ids],
        "final_loss": space.final_loss,
        "loss_history": list(space.loss_history),
        "lr_floor": space.config.lr0 / LR_FLOOR_DIVISOR,
        **(extra or {}),
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [path, sidecar]


def import_embeddings(path) -> EmbeddingSpace:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    labels, rows = [], []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    vectors = np.asarray(rows, dtype=np.float64).reshape(len(rows), meta["dim"])
    return EmbeddingSpace(vectors, meta["entity_ids"], EmbeddingConfig(**meta["config"]),
                          meta["final_loss"], tuple(meta["loss_history"]), tuple(labels))
