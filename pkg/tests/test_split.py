import itertools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph
from kglinkbench.errors import SamplingError
from kglinkbench.graphcore import KnowledgeGraph, Triple
from kglinkbench.split import (
    build_split, check_split, export_split, import_split, round_half_up,
    sample_negatives, split_edges,
)


def chain(n, rel="r"):
    return KnowledgeGraph.from_labeled([(f"e{i}", rel, f"e{i + 1}") for i in range(n)])


def test_split_sizes():
    s = split_edges(chain(10), 0.2, seed=1)
    assert (len(s.train_pos[0]), len(s.test_pos[0])) == (8, 2)


def test_split_below_threshold(caplog):
    g = KnowledgeGraph.from_labeled([("a", "lone", "b"), ("a", "r", "c"), ("c", "r", "d"), ("d", "r", "e")])
    s = split_edges(g, 0.5, seed=0, min_test_threshold=2)
    lone = g.relation_id("lone")
    assert (len(s.train_pos[lone]), len(s.test_pos[lone])) == (1, 0)
    assert s.below_threshold == [lone]
    assert lone not in s.evaluable()
    assert "lone" in caplog.text


def test_split_deterministic():
    g = random_graph(0)
    a, b = split_edges(g, 0.3, seed=5), split_edges(g, 0.3, seed=5)
    assert a.train_pos == b.train_pos and a.test_pos == b.test_pos


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_split_rejects_fraction(bad):
    with pytest.raises(ValueError):
        split_edges(chain(4), bad, seed=0)


def brute_force_candidates(g, pos, strategy, filtered):
    """All corruptions of ``pos`` the sampler may emit."""
    h, r, t = pos
    out = set()
    for e in range(g.n_entities):
        cands = []
        if strategy in ("corrupt-head", "corrupt-both"):
            cands.append(Triple(e, r, t))
        if strategy in ("corrupt-tail", "corrupt-both"):
            cands.append(Triple(h, r, e))
        for c in cands:
            if c != pos and c.head != c.tail and not (filtered and c in g):
                out.add(c)
    return out


def test_sample_single_candidate():
    g = KnowledgeGraph.from_labeled([("a", "r", "b"), ("c", "q", "a")])
    pos = [Triple(0, 0, 1)]
    oracle = brute_force_candidates(g, pos[0], "corrupt-tail", True)
    assert oracle == {Triple(0, 0, 2)}
    for seed in range(10):
        assert sample_negatives(g, pos, 1, "corrupt-tail", True, seed=seed) == [Triple(0, 0, 2)]


def test_sample_zero_ratio():
    g = chain(3)
    assert sample_negatives(g, list(g.triples), 0) == []


def test_sample_exhaustion_names_relation():
    g = KnowledgeGraph.from_labeled([("a", "likes", "b"), ("b", "likes", "a")])
    for p in g.triples:
        assert brute_force_candidates(g, p, "corrupt-tail", True) == set()
    with pytest.raises(SamplingError, match="likes"):
        sample_negatives(g, list(g.triples), 1, "corrupt-tail", True, seed=0)


@pytest.mark.parametrize("strategy", ["corrupt-head", "corrupt-tail", "corrupt-both"])
def test_sample_subset_of_enumeration(strategy):
    g = random_graph(3, n_entities=15, n_triples=60)
    pos = list(g.by_relation[0])
    allowed = set().union(*(brute_force_candidates(g, p, strategy, True) for p in pos))
    neg = sample_negatives(g, pos, 2.0, strategy, True, seed=11)
    assert len(neg) == round_half_up(2.0 * len(pos))
    assert set(neg) <= allowed
    assert len(set(neg)) == len(neg)


def test_sample_respects_forbid():
    g = chain(6)
    pos = list(g.triples)
    everything = sample_negatives(g, pos, 1.0, "corrupt-tail", True, seed=0)
    again = sample_negatives(g, pos, 1.0, "corrupt-tail", True, forbid=everything[:3], seed=0)
    assert not set(again) & set(everything[:3])


def test_unfiltered_may_hit_positives():
    g = KnowledgeGraph.from_labeled([("a", "r", "b"), ("a", "r", "c"), ("b", "r", "c")])
    neg = sample_negatives(g, [Triple(0, 0, 1)], 1.0, "corrupt-tail", False, seed=0)
    assert neg == [Triple(0, 0, 2)]  # a positive, allowed when unfiltered


def test_unfiltered_never_returns_uncorrupted():
    # Only (a, r, a) and (a, r, b) are reachable: a self-loop and the positive itself.
    g = KnowledgeGraph.from_labeled([("a", "r", "b")])
    with pytest.raises(SamplingError):
        sample_negatives(g, list(g.triples), 1.0, "corrupt-tail", False, seed=0)


def test_build_split_counts():
    s = build_split(chain(10), 0.2, 1.0, seed=3)
    assert [len(x[0]) for x in (s.train_pos, s.train_neg, s.test_pos, s.test_neg)] == [8, 8, 2, 2]


def test_build_split_filtered_invariants():
    g = random_graph(1)
    s = build_split(g, 0.25, 2.0, "corrupt-both", True, seed=9)
    check_split(g, s)
    for r in s.relations:
        assert not (set(s.train_neg[r]) | set(s.test_neg[r])) & set(g.triples)


def test_build_split_seeds_differ():
    g = random_graph(4, n_triples=100)
    a, b = build_split(g, seed=1), build_split(g, seed=2)
    assert a.test_pos != b.test_pos
    assert a.train_neg != b.train_neg


def test_train_negatives_never_test_positives_unfiltered():
    g = random_graph(2, n_entities=8, n_relations=1, n_triples=30)
    for seed in range(10):
        s = build_split(g, 0.3, 1.0, "corrupt-both", False, seed=seed)
        assert not set(s.train_neg[0]) & set(s.test_pos[0])


def test_split_bundle_roundtrip(tmp_path):
    g = random_graph(5)
    s = build_split(g, 0.2, 1.5, "corrupt-head", True, seed=4)
    written = export_split(g, s, tmp_path / "b", version="x")
    assert (tmp_path / "b" / "split.json") in written
    t = import_split(g, tmp_path / "b")
    assert t.config == s.config and t.seed == s.seed
    for name in ("train_pos", "train_neg", "test_pos", "test_neg"):
        assert getattr(t, name) == getattr(s, name)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    frac=st.floats(0.05, 0.95),
    ratio=st.sampled_from([0.5, 1.0, 2.0]),
    strategy=st.sampled_from(["corrupt-head", "corrupt-tail", "corrupt-both"]),
)
def test_split_properties(seed, frac, ratio, strategy):
    g = random_graph(seed % 50, n_entities=30, n_triples=120)
    s = build_split(g, frac, ratio, strategy, True, seed=seed)
    check_split(g, s)
    for r in s.relations:
        n = len(g.by_relation[r])
        if n >= 2:
            assert len(s.test_pos[r]) == round_half_up(frac * n)
    assert s == build_split(g, frac, ratio, strategy, True, seed=seed)
