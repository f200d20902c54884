"""Benchmark protocol: global vs. local embedding training, per-relation
edge classification, and training-fraction learning curves.

All runs over one graph share a single :class:`DataSplit`. Test triples
whose entities have no embedding are dropped and counted, never imputed.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from kglinkbench import __version__
from kglinkbench.embed import EmbeddingConfig, EmbeddingSpace, train_embeddings
from kglinkbench.errors import KGBenchError, LeakageError
from kglinkbench.featclass import ClassifierConfig, edge_feature_matrix, predict_labels, train_classifier
from kglinkbench.graphcore import KnowledgeGraph, Triple, restrict
from kglinkbench.metrics import EvalReport, RelationResult, confusion
from kglinkbench.seeding import derive_seed, fraction_key, rng_for
from kglinkbench.split import DataSplit, SplitConfig, build_split, round_half_up

log = logging.getLogger(__name__)

MODES = ("global", "local")
LIMIT_SCOPES = ("classifier_only", "embeddings_and_classifier")
LOCAL_VOCABULARY = "relation-subgraph"

# trace(stage, relation id or None, triples) with stage in
# {"embedding", "classifier", "test"}; "test" carries triples before OOV dropping.
Trace = Callable[[str, int | None, list], None]


@dataclass(frozen=True)
class BenchConfig:
    mode: str = "global"
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    operator: str = "hadamard"
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    fractions: tuple[float, ...] = (1.0,)
    seed: int = 0
    limit_scope: str = "classifier_only"
    relations: tuple[str, ...] | None = None
    threads: int = 1

    def __post_init__(self):
        if self.mode not in MODES + ("both",):
            raise ValueError(f"mode must be one of {MODES + ('both',)}, got {self.mode!r}")
        if self.limit_scope not in LIMIT_SCOPES:
            raise ValueError(f"limit_scope must be one of {LIMIT_SCOPES}")
        fr = tuple(float(f) for f in self.fractions)
        if not fr or any(not (0.0 < f <= 1.0) for f in fr):
            raise ValueError(f"fractions must lie in (0, 1], got {fr}")
        if list(fr) != sorted(set(fr)):
            raise ValueError(f"fractions must be strictly ascending, got {fr}")
        object.__setattr__(self, "fractions", fr)
        if self.relations is not None:
            object.__setattr__(self, "relations", tuple(self.relations))
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fractions"] = list(self.fractions)
        d["relations"] = None if self.relations is None else list(self.relations)
        d["local_vocabulary"] = LOCAL_VOCABULARY
        d["toolkit_version"] = __version__
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        d = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        if isinstance(d.get("embedding"), dict):
            d["embedding"] = EmbeddingConfig(**d["embedding"])
        if isinstance(d.get("classifier"), dict):
            d["classifier"] = ClassifierConfig(**d["classifier"])
        if isinstance(d.get("split"), dict):
            d["split"] = SplitConfig(**d["split"])
        if d.get("fractions") is not None:
            d["fractions"] = tuple(d["fractions"])
        if d.get("relations") is not None:
            d["relations"] = tuple(d["relations"])
        return cls(**d)


def make_split(g: KnowledgeGraph, cfg: BenchConfig) -> DataSplit:
    s = cfg.split
    return build_split(g, s.test_fraction, s.neg_ratio_train, s.strategy, s.filtered,
                       cfg.seed, s.min_test_threshold)


def _target_relations(g: KnowledgeGraph, cfg: BenchConfig, split: DataSplit) -> list[int]:
    if cfg.relations is None:
        wanted = split.relations
    else:
        wanted = sorted(g.relation_id(label) for label in cfg.relations)
    return [r for r in wanted if r in split.train_pos]


def _train_space(g: KnowledgeGraph, stream: list[Triple], cfg: BenchConfig, seed: int,
                 trace: Trace | None, relation: int | None) -> EmbeddingSpace | None:
    """Embed the entities of ``stream``; rows carry ``g``'s entity ids."""
    if not stream:
        return None
    sub = restrict(g, stream)
    if sub.n_entities < 2:
        return None
    if trace is not None:
        trace("embedding", relation, list(stream))
    ecfg = replace(cfg.embedding, seed=seed)
    workers = 1 if ecfg.deterministic else cfg.threads
    space = train_embeddings(sub.triples, sub.n_entities, ecfg, workers=workers)
    return space.relabel(sub.entity_map, sub.entities)


def _split_oov(space: EmbeddingSpace, triples):
    keep = [t for t in triples if t.head in space and t.tail in space]
    return keep, len(triples) - len(keep)


def _evaluate_relation(g, cfg, split, r, space, train_pos, train_neg, trace, shuffle_labels=False):
    label = g.relations[r]
    test_pos, test_neg = split.test_pos[r], split.test_neg[r]
    tr_pos, drop_p = _split_oov(space, train_pos)
    tr_neg, drop_n = _split_oov(space, train_neg)
    if not tr_pos or not tr_neg:
        return None, f"no usable training {'positives' if not tr_pos else 'negatives'}"
    train = tr_pos + tr_neg
    if not split.all_test_pos().isdisjoint(train):
        raise LeakageError(f"relation {label!r}: test positive in classifier training set")
    if trace is not None:
        trace("classifier", r, list(train))
    X = edge_feature_matrix(space, train, cfg.operator)
    y = np.r_[np.ones(len(tr_pos)), np.zeros(len(tr_neg))]
    if shuffle_labels:
        y = rng_for(cfg.seed, "label-control", r).permutation(y)
    cc = cfg.classifier
    clf = train_classifier(X, y, cc.lr, cc.epochs, cc.l2_reg,
                           seed=derive_seed(cfg.seed, "classifier", r), operator=cfg.operator)

    if trace is not None:
        trace("test", r, list(test_pos) + list(test_neg))
    te_pos, oov_p = _split_oov(space, test_pos)
    te_neg, oov_n = _split_oov(space, test_neg)
    test = te_pos + te_neg
    if not test:
        return None, "every test triple is out of vocabulary"
    pred = predict_labels(clf, edge_feature_matrix(space, test, cfg.operator))
    counts = confusion(pred, np.r_[np.ones(len(te_pos)), np.zeros(len(te_neg))])
    return RelationResult(
        relation_id=r, relation=label, counts=counts,
        n_test_pos=len(te_pos), n_test_neg=len(te_neg), n_dropped_oov=oov_p + oov_n,
        n_train_pos=len(tr_pos), n_train_neg=len(tr_neg), n_train_dropped_oov=drop_p + drop_n,
        n_embedded_entities=len(space),
        zero_denominator=(counts.tp + counts.fp == 0) or (counts.tp + counts.fn == 0),
    ), None


def _check_stream(split: DataSplit, stream, where: str):
    if not split.all_test_pos().isdisjoint(stream):
        raise LeakageError(f"test positive in {where} embedding-training stream")


def _run(g, cfg, split, mode, fraction, train_pos, train_neg, emb_stream, trace,
         shuffle_labels=False, space_cache=None) -> EvalReport:
    """One report for one mode given per-relation training data.

    ``emb_stream`` maps relation id to the positives used for embedding
    training; in global mode their union trains a single space.
    """
    targets = _target_relations(g, cfg, split)
    skipped: dict[str, str] = {}
    for r in targets:
        if not split.test_pos[r]:
            skipped[g.relations[r]] = "no test triples (below min_test_threshold or rounded to 0)"
    targets = [r for r in targets if split.test_pos[r]]
    fkey = fraction_key(fraction if cfg.limit_scope == "embeddings_and_classifier" else 1.0)

    # A cache shared across calls lets classifier_only curves embed once.
    cache = space_cache if space_cache is not None else {}
    if mode == "global":
        key = ("global", fkey)
        if key not in cache:
            stream = [t for r in sorted(emb_stream) for t in emb_stream[r]]
            _check_stream(split, stream, "global")
            cache[key] = _train_space(g, stream, cfg, derive_seed(cfg.seed, "embed-global", fkey),
                                      trace, None)
        if cache[key] is None:
            raise KGBenchError("global training stream is empty")
        spaces = {r: cache[key] for r in targets}
    else:
        def local(r):
            stream = list(emb_stream.get(r, []))
            _check_stream(split, stream, f"local ({g.relations[r]!r})")
            return _train_space(g, stream, cfg, derive_seed(cfg.seed, "embed-local", r, fkey), trace, r)
        todo = [r for r in targets if ("local", r, fkey) not in cache]
        # Lock-free training is itself multi-threaded; run those one at a time.
        n = cfg.threads if cfg.embedding.deterministic else 1
        with ThreadPoolExecutor(max_workers=n) as pool:
            for r, space in zip(todo, pool.map(local, todo)):
                cache[("local", r, fkey)] = space
        spaces = {r: cache[("local", r, fkey)] for r in targets}

    def evaluate(r):
        if spaces[r] is None:
            return None, "training subgraph has fewer than 2 entities"
        if not train_pos.get(r):
            return None, "no training positives at this fraction"
        return _evaluate_relation(g, cfg, split, r, spaces[r], train_pos[r], train_neg[r], trace,
                                  shuffle_labels)

    results = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for r, (res, why) in zip(targets, pool.map(evaluate, targets)):
            if res is None:
                log.warning("%s mode, fraction %g: skipping relation %r: %s",
                            mode, fraction, g.relations[r], why)
                skipped[g.relations[r]] = why
            else:
                results.append(res)
    if not results:
        raise KGBenchError(f"{mode} mode: no relation could be evaluated")
    return EvalReport.build(mode, results, fraction=fraction, seed=cfg.seed,
                            config=cfg.to_dict(), skipped=skipped)


def run_global(g: KnowledgeGraph, cfg: BenchConfig, split: DataSplit | None = None,
               trace: Trace | None = None, shuffle_labels: bool = False) -> EvalReport:
    """One embedding space trained on all training positives of every relation.

    With ``shuffle_labels`` the classifier sees the same features with
    permuted training labels (a chance-level control).
    """
    split = split if split is not None else make_split(g, cfg)
    return _run(g, cfg, split, "global", 1.0, split.train_pos, split.train_neg, split.train_pos,
                trace, shuffle_labels)


def run_local(g: KnowledgeGraph, cfg: BenchConfig, split: DataSplit | None = None,
              trace: Trace | None = None, shuffle_labels: bool = False) -> EvalReport:
    """A separate embedding space per relation, trained on that relation's
    training positives with a relation-local entity vocabulary."""
    split = split if split is not None else make_split(g, cfg)
    return _run(g, cfg, split, "local", 1.0, split.train_pos, split.train_neg, split.train_pos,
                trace, shuffle_labels)


def subsample_indices(n: int, fraction: float, seed: int, tag: str, r: int) -> list[int]:
    """Indices of a nested random subsample of size ``round(fraction * n)``.

    A fixed per-relation permutation is truncated, so the subsample for a
    smaller fraction is a subset of the one for a larger fraction. Indices
    are returned sorted so the full fraction reproduces the original order.
    """
    k = round_half_up(fraction * n)
    order = rng_for(seed, tag, r).permutation(n)
    return sorted(order[:k].tolist())


def subsample_split(split: DataSplit, fraction: float, seed: int):
    """Per-relation training positives and matching negatives at ``fraction``."""
    pos, neg = {}, {}
    for r in split.relations:
        tp, tn = split.train_pos[r], split.train_neg[r]
        pos[r] = [tp[i] for i in subsample_indices(len(tp), fraction, seed, "curve-pos", r)]
        n_neg = round_half_up(split.config.neg_ratio_train * len(pos[r]))
        order = rng_for(seed, "curve-neg", r).permutation(len(tn))
        neg[r] = [tn[i] for i in sorted(order[:n_neg].tolist())]
    return pos, neg


def learning_curve(g: KnowledgeGraph, cfg: BenchConfig, split: DataSplit | None = None,
                   mode: str | None = None, trace: Trace | None = None) -> list[tuple[float, EvalReport]]:
    """Reports at each training fraction of ``cfg.fractions``; test sets are
    the same at every point."""
    split = split if split is not None else make_split(g, cfg)
    mode = mode or cfg.mode
    if mode not in MODES:
        raise ValueError(f"learning_curve needs mode 'global' or 'local', got {mode!r}")
    curve = []
    cache: dict = {}
    for f in cfg.fractions:
        pos, neg = subsample_split(split, f, cfg.seed)
        if not any(pos.values()):
            log.warning("fraction %g leaves no training positives in any relation; skipped", f)
            continue
        stream = split.train_pos if cfg.limit_scope == "classifier_only" else pos
        try:
            report = _run(g, cfg, split, mode, f, pos, neg, stream, trace, space_cache=cache)
        except LeakageError:
            raise
        except KGBenchError as exc:
            log.warning("fraction %g skipped: %s", f, exc)
            continue
        curve.append((f, report))
    return curve


def compare_rows(global_report: EvalReport, local_report: EvalReport) -> list[dict]:
    """Side-by-side per-relation rows for the global and local reports."""
    rows = []
    for label in sorted(set(global_report.per_relation) | set(local_report.per_relation)):
        gr = global_report.per_relation.get(label)
        lr = local_report.per_relation.get(label)
        gf = gr.scores["f1"] if gr else None
        lf = lr.scores["f1"] if lr else None
        rows.append({
            "relation": label,
            "fraction": repr(float(global_report.fraction)),
            "global_f1": "" if gf is None else repr(gf),
            "local_f1": "" if lf is None else repr(lf),
            "delta_f1": "" if gf is None or lf is None else repr(gf - lf),
            "global_n_dropped_oov": "" if gr is None else gr.n_dropped_oov,
            "local_n_dropped_oov": "" if lr is None else lr.n_dropped_oov,
        })
    return rows
