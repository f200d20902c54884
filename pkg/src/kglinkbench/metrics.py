"""Confusion counts, precision/recall/F1 and report serialisation."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_COLUMNS = (
    "relation", "n_test_pos", "n_test_neg", "n_dropped_oov",
    "tp", "fp", "tn", "fn", "precision", "recall", "f1",
    "mode", "fraction", "seed",
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


def confusion(predictions, labels) -> ConfusionCounts:
    p = np.asarray(predictions).astype(bool).ravel()
    y = np.asarray(labels).astype(bool).ravel()
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.size} predictions, {y.size} labels")
    if p.size == 0:
        raise ValueError("need at least one prediction")
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & y)),
        fp=int(np.count_nonzero(p & ~y)),
        tn=int(np.count_nonzero(~p & ~y)),
        fn=int(np.count_nonzero(~p & y)),
    )


def prf1(c: ConfusionCounts) -> dict[str, float]:
    """Precision, recall and F1; each is 0 when its denominator is 0."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def aggregate(per_relation) -> dict[str, float]:
    """Micro F1 from pooled counts and macro F1 as the plain mean of
    per-relation F1, both over relations with at least one test example.

    ``per_relation`` is a mapping or iterable of :class:`ConfusionCounts`.
    """
    counts = list(per_relation.values()) if isinstance(per_relation, dict) else list(per_relation)
    counts = [c for c in counts if c.total > 0]
    if not counts:
        raise ValueError("no evaluable relation to aggregate")
    pooled = ConfusionCounts()
    for c in counts:
        pooled = pooled + c
    micro = prf1(pooled)
    macro = sum(prf1(c)["f1"] for c in counts) / len(counts)
    return {
        "micro_precision": micro["precision"],
        "micro_recall": micro["recall"],
        "micro_f1": micro["f1"],
        "macro_f1": macro,
    }


@dataclass
class RelationResult:
    relation_id: int
    relation: str
    counts: ConfusionCounts
    n_test_pos: int
    n_test_neg: int
    n_dropped_oov: int
    n_train_pos: int = 0
    n_train_neg: int = 0
    n_train_dropped_oov: int = 0
    n_embedded_entities: int = 0
    zero_denominator: bool = False

    @property
    def scores(self) -> dict[str, float]:
        return prf1(self.counts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(self.scores)
        return d


@dataclass
class EvalReport:
    mode: str
    per_relation: dict[str, RelationResult]
    micro_f1: float
    macro_f1: float
    micro_precision: float = 0.0
    micro_recall: float = 0.0
    fraction: float = 1.0
    seed: int = 0
    config: dict = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)

    @classmethod
    def build(cls, mode, results, *, fraction=1.0, seed=0, config=None, skipped=None):
        per = {res.relation: res for res in results}
        agg = aggregate([res.counts for res in results])
        return cls(mode=mode, per_relation=per, fraction=fraction, seed=seed,
                   config=dict(config or {}), skipped=dict(skipped or {}), **agg)

    def pooled_counts(self) -> ConfusionCounts:
        pooled = ConfusionCounts()
        for res in self.per_relation.values():
            pooled = pooled + res.counts
        return pooled

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "fraction": self.fraction,
            "seed": self.seed,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_relation": {k: v.to_dict() for k, v in self.per_relation.items()},
            "skipped": self.skipped,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        per = {}
        for label, r in d["per_relation"].items():
            per[label] = RelationResult(
                counts=ConfusionCounts(**r["counts"]),
                **{k: r[k] for k in RelationResult.__dataclass_fields__ if k != "counts"},
            )
        return cls(mode=d["mode"], per_relation=per, micro_f1=d["micro_f1"], macro_f1=d["macro_f1"],
                   micro_precision=d["micro_precision"], micro_recall=d["micro_recall"],
                   fraction=d["fraction"], seed=d["seed"], config=d["config"], skipped=d["skipped"])

    def csv_rows(self) -> list[dict]:
        rows = []
        for label, res in self.per_relation.items():
            c, s = res.counts, res.scores
            rows.append({
                "relation": label, "n_test_pos": res.n_test_pos, "n_test_neg": res.n_test_neg,
                "n_dropped_oov": res.n_dropped_oov,
                "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn,
                "precision": repr(s["precision"]), "recall": repr(s["recall"]), "f1": repr(s["f1"]),
                "mode": self.mode, "fraction": repr(float(self.fraction)), "seed": self.seed,
            })
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.csv_rows())
        return buf.getvalue()
