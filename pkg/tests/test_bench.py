from collections import defaultdict
from dataclasses import replace

import pytest

from conftest import random_graph
from kglinkbench.bench import (
    BenchConfig, compare_rows, learning_curve, make_split, run_global, run_local,
    subsample_indices, subsample_split,
)
from kglinkbench.embed import EmbeddingConfig
from kglinkbench.errors import LeakageError
from kglinkbench.graphcore import KnowledgeGraph, restrict
from kglinkbench.split import SplitConfig

FAST = BenchConfig(embedding=EmbeddingConfig(dim=8, epochs=10), seed=1)


class Recorder:
    def __init__(self):
        self.seen = defaultdict(list)

    def __call__(self, stage, relation, triples):
        self.seen[stage].append((relation, list(triples)))


def test_global_report_shape():
    g = random_graph(0)
    rep = run_global(g, FAST)
    assert rep.mode == "global"
    assert set(rep.per_relation) == set(g.relations)
    for res in rep.per_relation.values():
        assert 0.0 <= res.scores["f1"] <= 1.0


def test_single_relation_micro_equals_macro():
    g = random_graph(1, n_relations=1, n_triples=120)
    rep = run_global(g, FAST)
    assert len(rep.per_relation) == 1
    assert rep.micro_f1 == rep.macro_f1


def test_global_deterministic():
    g = random_graph(2)
    assert run_global(g, FAST).to_json() == run_global(g, FAST).to_json()
    assert run_local(g, FAST).to_json() == run_local(g, FAST).to_json()


def test_conservation_of_test_triples():
    g = random_graph(3, n_entities=80, n_triples=200)
    split = make_split(g, FAST)
    for rep in (run_global(g, FAST, split), run_local(g, FAST, split)):
        for res in rep.per_relation.values():
            r = res.relation_id
            assert res.n_test_pos + res.n_test_neg + res.n_dropped_oov == \
                len(split.test_pos[r]) + len(split.test_neg[r])


def test_local_embeds_each_relation_separately():
    g = random_graph(4, n_entities=60, n_relations=2, n_triples=200)
    split = make_split(g, FAST)
    rec = Recorder()
    rep = run_local(g, FAST, split, trace=rec)
    assert len(rep.per_relation) == 2
    for r in range(2):
        sub = restrict(g, split.train_pos[r])
        assert rep.per_relation[g.relations[r]].n_embedded_entities == sub.n_entities
    assert sorted(r for r, _ in rec.seen["embedding"]) == [0, 1]


def test_single_relation_global_local_same_tests():
    g = random_graph(5, n_relations=1, n_triples=150)
    split = make_split(g, FAST)
    a, b = Recorder(), Recorder()
    rg = run_global(g, FAST, split, trace=a)
    rl = run_local(g, FAST, split, trace=b)
    assert set(map(tuple, a.seen["test"][0][1])) == set(map(tuple, b.seen["test"][0][1]))
    assert set(rg.per_relation) == set(rl.per_relation)


def test_lone_relation_skipped_with_warning(caplog):
    rows = [(f"e{i}", "big", f"e{(i * 3 + 1) % 30}") for i in range(30)] + [("e0", "lone", "e5")]
    g = KnowledgeGraph.from_labeled(rows)
    rep = run_local(g, FAST)
    assert "lone" not in rep.per_relation and "lone" in rep.skipped
    assert "lone" in caplog.text


def test_relation_filter():
    g = random_graph(6)
    rep = run_global(g, replace(FAST, relations=("r1",)))
    assert list(rep.per_relation) == ["r1"]


def test_leakage_guard_trips_on_corrupted_split():
    g = random_graph(7)
    split = make_split(g, FAST)
    split.train_pos[0] = split.train_pos[0] + split.test_pos[0][:1]
    with pytest.raises(LeakageError):
        run_global(g, FAST, split)
    with pytest.raises(LeakageError):
        run_local(g, FAST, split)


def test_subsamples_are_nested():
    for r in range(5):
        small = set(subsample_indices(100, 0.1, 3, "curve-pos", r))
        mid = set(subsample_indices(100, 0.5, 3, "curve-pos", r))
        assert len(small) == 10 and len(mid) == 50 and small <= mid
    assert subsample_indices(7, 1.0, 0, "curve-pos", 0) == list(range(7))


def test_subsample_split_full_fraction_identity():
    g = random_graph(8)
    split = make_split(g, FAST)
    pos, neg = subsample_split(split, 1.0, FAST.seed)
    assert pos == split.train_pos and neg == split.train_neg


def test_learning_curve_full_fraction_matches_runs():
    g = random_graph(9)
    split = make_split(g, FAST)
    for mode, run in (("global", run_global), ("local", run_local)):
        [(f, rep)] = learning_curve(g, FAST, split, mode=mode)
        assert f == 1.0
        assert rep.to_json() == run(g, FAST, split).to_json()


@pytest.mark.parametrize("scope", ["classifier_only", "embeddings_and_classifier"])
def test_learning_curve_fixed_tests(scope):
    g = random_graph(10, n_triples=400)
    cfg = replace(FAST, fractions=(0.2, 0.6, 1.0), limit_scope=scope)
    split = make_split(g, cfg)
    rec = Recorder()
    curve = learning_curve(g, cfg, split, trace=rec)
    assert [f for f, _ in curve] == [0.2, 0.6, 1.0]
    per_fraction = defaultdict(list)
    for r, triples in rec.seen["test"]:
        per_fraction[r].append(set(triples))
    for r, sets in per_fraction.items():
        assert all(s == sets[0] for s in sets)
    streams = [t for _, t in rec.seen["embedding"]]
    if scope == "classifier_only":
        assert len(streams) == 1
    else:
        assert len(streams) == 3 and len(streams[0]) < len(streams[2])


def test_learning_curve_skips_empty_fraction(caplog):
    g = random_graph(11, n_relations=1, n_triples=10)
    cfg = replace(FAST, fractions=(0.01, 1.0))
    curve = learning_curve(g, cfg)
    assert [f for f, _ in curve] == [1.0]
    assert "0.01" in caplog.text


def test_compare_rows():
    g = random_graph(12)
    split = make_split(g, FAST)
    rows = compare_rows(run_global(g, FAST, split), run_local(g, FAST, split))
    assert [r["relation"] for r in rows] == sorted(g.relations)
    assert {"global_f1", "local_f1", "global_n_dropped_oov", "local_n_dropped_oov"} <= set(rows[0])


def test_config_roundtrip():
    cfg = BenchConfig(mode="local", fractions=[0.5, 1.0], relations=["a"],
                      split=SplitConfig(test_fraction=0.3))
    assert BenchConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("kw", [dict(fractions=(0.5, 0.1)), dict(fractions=(0.0,)),
                                dict(mode="x"), dict(limit_scope="x"), dict(threads=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        BenchConfig(**kw)


def test_hogwild_bench_runs():
    g = random_graph(13)
    cfg = replace(FAST, embedding=replace(FAST.embedding, deterministic=False), threads=2)
    rep = run_local(g, cfg)
    assert rep.per_relation
