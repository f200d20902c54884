import json

import pytest

from kglinkbench.cli import main
from kglinkbench.graphcore import load_graph

BENCH_FAST = ["--dim", "8", "--epochs", "5", "--clf-epochs", "100"]


@pytest.fixture
def graph(tmp_path):
    p = tmp_path / "g.tsv"
    assert main(["synth", "--blocks", "2", "--block-size", "20", "--p-in", "0.3",
                 "--p-out", "0.05", "--seed", "7", "--out", str(p)]) == 0
    return p


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_synth_deterministic(tmp_path, graph):
    other = tmp_path / "g2.tsv"
    main(["synth", "--blocks", "2", "--block-size", "20", "--p-in", "0.3",
          "--p-out", "0.05", "--seed", "7", "--out", str(other)])
    assert graph.read_bytes() == other.read_bytes()
    assert len(load_graph(graph).relations) == 2


def test_synth_count(tmp_path):
    p = tmp_path / "g.tsv"
    assert main(["synth", "--p-in", "0.1", "--p-out", "0", "--seed", "7", "--out", str(p)]) == 0
    n = len(p.read_text().splitlines())
    assert abs(n - 990) <= 99


def test_synth_empty_is_usage_error(tmp_path, capsys):
    assert main(["synth", "--p-in", "0", "--p-out", "0", "--out", str(tmp_path / "x")]) == 2
    assert "empty graph" in capsys.readouterr().err


def test_missing_graph_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["split", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_bad_value_exit_2(tmp_path, graph):
    assert main(["split", "--graph", str(graph), "--test-fraction", "1.5", "--out", str(tmp_path / "s")]) == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n")
    assert main(["split", "--graph", str(bad), "--out", str(tmp_path / "s")]) == 1
    err = capsys.readouterr().err
    assert "line 1" in err and len(err.strip().splitlines()) == 1


def test_split_bundle_byte_identical(tmp_path, graph):
    args = ["split", "--graph", str(graph), "--test-fraction", "0.2", "--neg-ratio", "1", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    man = json.loads((a / "manifest.json").read_text())
    assert "split.json" in man["outputs"]
    for sub in sorted(p.name for p in a.iterdir() if p.is_dir()):
        assert _files(a / sub) == _files(b / sub)
    assert (a / "split.json").read_bytes() == (b / "split.json").read_bytes()


def test_bench_modes_and_outputs(tmp_path, graph):
    out = tmp_path / "o"
    assert main(["bench", "--graph", str(graph), "--mode", "both", "--fractions", "0.5,1.0",
                 "--seed", "7", "--out", str(out)] + BENCH_FAST) == 0
    names = set(_files(out))
    for m in ("global", "local"):
        for f in ("0.5", "1"):
            assert {f"report_{m}_f{f}.json", f"report_{m}_f{f}.csv"} <= names
    assert {"comparison_f0.5.csv", "comparison_f1.csv", "curve.csv", "manifest.json"} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["mode"] == "both" and man["seed"] == 7
    assert len(man["input"]["sha256"]) == 64
    assert set(man["outputs"]) == names - {"manifest.json"}


def test_bench_local_three_fractions(tmp_path, graph):
    out = tmp_path / "o"
    assert main(["bench", "--graph", str(graph), "--mode", "local", "--fractions", "0.1,0.5,1.0",
                 "--out", str(out)] + BENCH_FAST) == 0
    assert sorted(p.name for p in out.glob("report_local_*.json")) == [
        "report_local_f0.1.json", "report_local_f0.5.json", "report_local_f1.json"]


def test_config_file_precedence(tmp_path, graph):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "embedding": {"dim": 4, "epochs": 2}}))
    out = tmp_path / "o"
    assert main(["bench", "--graph", str(graph), "--config", str(cfg), "--dim", "6",
                 "--clf-epochs", "10", "--out", str(out)]) == 0
    c = json.loads((out / "manifest.json").read_text())["config"]
    assert c["seed"] == 3 and c["embedding"]["dim"] == 6 and c["embedding"]["epochs"] == 2


def test_rerun_from_manifest(tmp_path, graph):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bench", "--graph", str(graph), "--seed", "5", "--out", str(a)] + BENCH_FAST) == 0
    assert main(["bench", "--graph", str(graph), "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    fa, fb = _files(a), _files(b)
    fa.pop("manifest.json"), fb.pop("manifest.json")
    assert fa == fb


def test_bench_with_split_dir(tmp_path, graph):
    assert main(["split", "--graph", str(graph), "--seed", "2", "--out", str(tmp_path / "s")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bench", "--graph", str(graph), "--seed", "2", "--split-dir", str(tmp_path / "s"),
                 "--out", str(a)] + BENCH_FAST) == 0
    assert main(["bench", "--graph", str(graph), "--seed", "2", "--out", str(b)] + BENCH_FAST) == 0
    assert (a / "report_global_f1.json").read_bytes() == (b / "report_global_f1.json").read_bytes()


def test_export_embeddings(tmp_path, graph):
    out = tmp_path / "e"
    assert main(["export-embeddings", "--graph", str(graph), "--mode", "local", "--dim", "4",
                 "--epochs", "2", "--out", str(out)]) == 0
    assert (out / "embeddings_local_r0000.tsv").exists()
    meta = json.loads((out / "embeddings_local_r0000.json").read_text())
    assert meta["dim"] == 4 and meta["relation"] == "intra"
    row = (out / "embeddings_local_r0000.tsv").read_text().splitlines()[0].split("\t")
    assert len(row) == 5
    assert main(["export-embeddings", "--graph", str(graph), "--dim", "4", "--epochs", "2",
                 "--out", str(out)]) == 0
    assert (out / "embeddings_global.tsv").exists()
