"""Knowledge-graph data model and TSV edge-list ingestion."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from kglinkbench.errors import KGBenchError, ParseError

log = logging.getLogger(__name__)


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    """Immutable directed multi-relational graph with dense integer ids.

    ``entity_map`` and ``relation_map`` are set on graphs derived from a
    parent graph (e.g. by :func:`relation_subgraph`); they map local ids
    back to the parent's ids.
    """

    entities: tuple[str, ...]
    relations: tuple[str, ...]
    triples: tuple[Triple, ...]
    by_relation: tuple[tuple[Triple, ...], ...]
    entity_map: tuple[int, ...] | None = None
    relation_map: tuple[int, ...] | None = None
    n_duplicates: int = 0
    n_self_loops: int = 0
    _triple_set: frozenset = field(init=False, repr=False)
    _entity_index: dict = field(init=False, repr=False)
    _relation_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_triple_set", frozenset(self.triples))
        object.__setattr__(self, "_entity_index", {e: i for i, e in enumerate(self.entities)})
        object.__setattr__(self, "_relation_index", {r: i for i, r in enumerate(self.relations)})

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def __len__(self):
        return len(self.triples)

    def __contains__(self, triple):
        return tuple(triple) in self._triple_set

    def contains(self, h: int, r: int, t: int) -> bool:
        return (h, r, t) in self._triple_set

    def entity_id(self, label: str) -> int:
        return self._entity_index[label]

    def relation_id(self, label: str) -> int:
        try:
            return self._relation_index[label]
        except KeyError:
            raise KGBenchError(f"unknown relation {label!r}") from None

    def labels(self, triple: Triple) -> tuple[str, str, str]:
        h, r, t = triple
        return self.entities[h], self.relations[r], self.entities[t]

    def to_parent(self, triple: Triple) -> Triple:
        """Map a triple in local ids to the parent graph's ids."""
        if self.entity_map is None:
            return Triple(*triple)
        h, r, t = triple
        rel = self.relation_map[r] if self.relation_map is not None else r
        return Triple(self.entity_map[h], rel, self.entity_map[t])

    @classmethod
    def from_labeled(cls, rows: Iterable[tuple[str, str, str]]) -> "KnowledgeGraph":
        """Build a graph from label triples; ids follow first appearance."""
        entities: dict[str, int] = {}
        relations: dict[str, int] = {}
        seen: dict[Triple, None] = {}
        dups = 0
        for h, r, t in rows:
            hi = entities.setdefault(h, len(entities))
            ri = relations.setdefault(r, len(relations))
            ti = entities.setdefault(t, len(entities))
            tr = Triple(hi, ri, ti)
            if tr in seen:
                dups += 1
            else:
                seen[tr] = None
        return _assemble(list(entities), list(relations), list(seen), n_duplicates=dups)


def _assemble(entities, relations, triples, entity_map=None, relation_map=None, n_duplicates=0):
    buckets: list[list[Triple]] = [[] for _ in relations]
    loops = 0
    for tr in triples:
        buckets[tr.relation].append(tr)
        loops += tr.head == tr.tail
    return KnowledgeGraph(
        entities=tuple(entities),
        relations=tuple(relations),
        triples=tuple(triples),
        by_relation=tuple(tuple(b) for b in buckets),
        entity_map=None if entity_map is None else tuple(entity_map),
        relation_map=None if relation_map is None else tuple(relation_map),
        n_duplicates=n_duplicates,
        n_self_loops=loops,
    )


def load_graph(path, format: str = "tsv") -> KnowledgeGraph:
    """Read a UTF-8 tab-separated edge list (head, relation, tail).

    Lines starting with ``#`` and blank lines are skipped; trailing
    whitespace is trimmed. Duplicate triples are dropped and counted.
    """
    if format != "tsv":
        raise ValueError(f"unsupported graph format {format!r}")
    path = Path(path)
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line=lineno)
            rows.append(tuple(fields))
    if not rows:
        raise ParseError(f"no triples in {path}")
    g = KnowledgeGraph.from_labeled(rows)
    if g.n_duplicates:
        log.warning("%s: dropped %d duplicate triple(s)", path, g.n_duplicates)
    if g.n_self_loops:
        log.warning("%s: %d self-loop triple(s)", path, g.n_self_loops)
    return g


def restrict(g: KnowledgeGraph, triples: Iterable[Triple]) -> KnowledgeGraph:
    """Graph over a subset of ``g``'s triples with densely remapped ids.

    Entities and relations are renumbered in first-appearance order; the
    result's ``entity_map``/``relation_map`` give the ids in ``g``.
    """
    ent: dict[int, int] = {}
    rel: dict[int, int] = {}
    local = []
    for h, r, t in triples:
        if not g.contains(h, r, t):
            raise KGBenchError(f"triple {(h, r, t)} is not in the graph")
        hi = ent.setdefault(h, len(ent))
        ri = rel.setdefault(r, len(rel))
        ti = ent.setdefault(t, len(ent))
        local.append(Triple(hi, ri, ti))
    local = list(dict.fromkeys(local))
    return _assemble(
        [g.entities[e] for e in ent],
        [g.relations[r] for r in rel],
        local,
        entity_map=list(ent),
        relation_map=list(rel),
    )


def relation_subgraph(g: KnowledgeGraph, r) -> KnowledgeGraph:
    """The triples of one relation, with entity ids local to the subgraph."""
    if isinstance(r, str):
        r = g.relation_id(r)
    if not (0 <= r < g.n_relations):
        raise KGBenchError(f"unknown relation id {r}")
    return restrict(g, g.by_relation[r])
