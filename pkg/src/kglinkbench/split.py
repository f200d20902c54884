"""Per-relation train/test partitioning and corrupted-triple negatives."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from kglinkbench.errors import KGBenchError, SamplingError
from kglinkbench.graphcore import KnowledgeGraph, Triple
from kglinkbench.seeding import derive_seed, rng_for

log = logging.getLogger(__name__)

STRATEGIES = ("corrupt-head", "corrupt-tail", "corrupt-both")
MIN_TEST_THRESHOLD = 2
ATTEMPTS_PER_SAMPLE = 100
SPLIT_FILES = ("train_pos", "train_neg", "test_pos", "test_neg")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    neg_ratio_train: float = 1.0
    strategy: str = "corrupt-both"
    filtered: bool = True
    min_test_threshold: int = MIN_TEST_THRESHOLD

    def __post_init__(self):
        _check_fraction(self.test_fraction)
        if not self.neg_ratio_train >= 0:
            raise ValueError(f"neg_ratio_train must be >= 0, got {self.neg_ratio_train}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.min_test_threshold < 1:
            raise ValueError("min_test_threshold must be >= 1")


@dataclass
class DataSplit:
    """Positive and negative train/test triples, indexed by relation id."""

    train_pos: dict[int, list[Triple]]
    test_pos: dict[int, list[Triple]]
    train_neg: dict[int, list[Triple]] = field(default_factory=dict)
    test_neg: dict[int, list[Triple]] = field(default_factory=dict)
    seed: int = 0
    config: SplitConfig = field(default_factory=SplitConfig)
    below_threshold: list[int] = field(default_factory=list)

    @property
    def test_fraction(self):
        return self.config.test_fraction

    @property
    def neg_ratio_train(self):
        return self.config.neg_ratio_train

    @property
    def relations(self) -> list[int]:
        return sorted(self.train_pos)

    def evaluable(self) -> list[int]:
        return [r for r in self.relations if self.test_pos.get(r)]

    def all_test_pos(self) -> set[Triple]:
        return {t for ts in self.test_pos.values() for t in ts}

    def all_train_pos(self) -> list[Triple]:
        return [t for r in self.relations for t in self.train_pos[r]]


def _check_fraction(test_fraction):
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")


def split_edges(
    g: KnowledgeGraph,
    test_fraction: float,
    seed: int,
    min_test_threshold: int = MIN_TEST_THRESHOLD,
) -> DataSplit:
    """Uniform random train/test partition of each relation's triples."""
    _check_fraction(test_fraction)
    if len(g) == 0:
        raise KGBenchError("cannot split an empty graph")
    train, test, small = {}, {}, []
    for r, edges in enumerate(g.by_relation):
        edges = list(edges)
        if len(edges) < min_test_threshold:
            log.warning(
                "relation %r has %d triple(s) (< %d); all kept for training, excluded from evaluation",
                g.relations[r], len(edges), min_test_threshold,
            )
            train[r], test[r] = edges, []
            small.append(r)
            continue
        n_test = round_half_up(test_fraction * len(edges))
        order = rng_for(seed, "split", r).permutation(len(edges))
        test_idx = set(order[:n_test].tolist())
        # Keep file order inside each side so downstream streams are stable.
        test[r] = [e for i, e in enumerate(edges) if i in test_idx]
        train[r] = [e for i, e in enumerate(edges) if i not in test_idx]
    cfg = SplitConfig(test_fraction=test_fraction, min_test_threshold=min_test_threshold)
    return DataSplit(train_pos=train, test_pos=test, seed=seed, config=cfg, below_threshold=small)


def sample_negatives(
    g: KnowledgeGraph,
    positives: list[Triple],
    ratio: float,
    strategy: str = "corrupt-both",
    filtered: bool = True,
    forbid: Iterable[Triple] = (),
    seed: int = 0,
) -> list[Triple]:
    """Corrupt uniformly chosen positives until ``round(ratio * n)`` distinct
    negatives are found.

    A candidate is rejected if it leaves the positive unchanged, is a
    self-loop, a triple of ``g`` (when ``filtered``), in ``forbid``, or
    already emitted by this call.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if ratio < 0:
        raise ValueError(f"ratio must be >= 0, got {ratio}")
    want = round_half_up(ratio * len(positives))
    if want == 0:
        return []
    if not positives:
        raise ValueError("positives must be non-empty")
    if g.n_entities < 2:
        raise SamplingError("negative sampling needs at least 2 entities")

    forbid = set(forbid)
    rng = rng_for(seed)
    n_pos, n_ent = len(positives), g.n_entities
    out: dict[Triple, None] = {}
    budget = ATTEMPTS_PER_SAMPLE * want
    attempts = 0
    while len(out) < want:
        if attempts >= budget:
            rels = sorted({g.relations[p.relation] for p in positives})
            raise SamplingError(
                f"found only {len(out)} of {want} negatives after {attempts} attempts "
                f"for relation(s) {', '.join(map(repr, rels))}; graph too dense for "
                f"strategy {strategy!r}"
            )
        attempts += 1
        h, r, t = positives[int(rng.integers(n_pos))]
        if strategy == "corrupt-head":
            head_side = True
        elif strategy == "corrupt-tail":
            head_side = False
        else:
            head_side = bool(rng.integers(2))
        e = int(rng.integers(n_ent))
        if e == (h if head_side else t):
            continue
        cand = Triple(e, r, t) if head_side else Triple(h, r, e)
        if cand.head == cand.tail:
            continue
        if filtered and cand in g:
            continue
        if cand in forbid or cand in out:
            continue
        out[cand] = None
    return list(out)


def build_split(
    g: KnowledgeGraph,
    test_fraction: float = 0.2,
    neg_ratio_train: float = 1.0,
    strategy: str = "corrupt-both",
    filtered: bool = True,
    seed: int = 0,
    min_test_threshold: int = MIN_TEST_THRESHOLD,
) -> DataSplit:
    """Positive split plus train negatives at ``neg_ratio_train`` and 1:1
    test negatives, per relation."""
    cfg = SplitConfig(test_fraction, neg_ratio_train, strategy, filtered, min_test_threshold)
    split = split_edges(g, test_fraction, seed, min_test_threshold)
    split.config = cfg
    for r in split.relations:
        train_pos, test_pos = split.train_pos[r], split.test_pos[r]
        # A test positive must never be a training example, even unfiltered.
        split.train_neg[r] = (
            sample_negatives(g, train_pos, neg_ratio_train, strategy, filtered,
                             forbid=test_pos, seed=derive_seed(seed, "neg-train", r))
            if train_pos else []
        )
        split.test_neg[r] = (
            sample_negatives(g, test_pos, 1.0, strategy, filtered,
                             forbid=split.train_neg[r], seed=derive_seed(seed, "neg-test", r))
            if test_pos else []
        )
    return split


def check_split(g: KnowledgeGraph, split: DataSplit) -> None:
    """Assert the structural invariants of a split; raises AssertionError."""
    for r in split.relations:
        tp, sp = set(split.train_pos[r]), set(split.test_pos[r])
        assert not tp & sp, f"relation {r}: train/test positives overlap"
        assert tp | sp == set(g.by_relation[r]), f"relation {r}: positives do not cover relation"
        tn, sn = set(split.train_neg[r]), set(split.test_neg[r])
        assert not tn & sn, f"relation {r}: train/test negatives overlap"
        assert len(sn) == len(sp)
        assert len(tn) == round_half_up(split.config.neg_ratio_train * len(tp))
        if split.config.filtered:
            assert not any(t in g for t in tn | sn), f"relation {r}: negative is a graph triple"


def _write_tsv(path: Path, g: KnowledgeGraph, triples):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for tr in triples:
            fh.write("\t".join(g.labels(tr)) + "\n")


def export_split(g: KnowledgeGraph, split: DataSplit, out_dir, version: str = "") -> list[Path]:
    """Write one directory of four TSVs per relation plus ``split.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    bundles = []
    for r in split.relations:
        sub = out_dir / f"r{r:04d}"
        sub.mkdir(exist_ok=True)
        for name in SPLIT_FILES:
            p = sub / f"{name}.tsv"
            _write_tsv(p, g, getattr(split, name)[r])
            written.append(p)
        bundles.append({
            "relation_id": r,
            "relation": g.relations[r],
            "dir": sub.name,
            **{f"n_{name}": len(getattr(split, name)[r]) for name in SPLIT_FILES},
        })
    manifest = {
        "toolkit_version": version,
        "seed": split.seed,
        **asdict(split.config),
        "below_threshold": [g.relations[r] for r in split.below_threshold],
        "relations": bundles,
    }
    mp = out_dir / "split.json"
    mp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(mp)
    return written


def import_split(g: KnowledgeGraph, split_dir) -> DataSplit:
    """Read a bundle written by :func:`export_split` against graph ``g``."""
    split_dir = Path(split_dir)
    manifest = json.loads((split_dir / "split.json").read_text(encoding="utf-8"))
    cfg = SplitConfig(**{k: manifest[k] for k in SplitConfig.__dataclass_fields__})
    parts = {name: {} for name in SPLIT_FILES}
    for b in manifest["relations"]:
        r = g.relation_id(b["relation"])
        for name in SPLIT_FILES:
            rows = []
            with (split_dir / b["dir"] / f"{name}.tsv").open(encoding="utf-8") as fh:
                for line in fh:
                    h, rel, t = line.rstrip("\n").split("\t")
                    rows.append(Triple(g.entity_id(h), g.relation_id(rel), g.entity_id(t)))
            parts[name][r] = rows
    return DataSplit(
        **parts,
        seed=manifest["seed"],
        config=cfg,
        below_threshold=[g.relation_id(x) for x in manifest["below_threshold"]],
    )
