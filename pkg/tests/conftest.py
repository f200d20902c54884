import logging
import random

import pytest

from kglinkbench.graphcore import KnowledgeGraph
from kglinkbench.synth import planted_partition


@pytest.fixture
def write_tsv(tmp_path):
    def _write(lines, name="g.tsv"):
        p = tmp_path / name
        p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return p
    return _write


def random_graph(seed, n_entities=40, n_relations=3, n_triples=300):
    """Sparse random multi-relational graph with no self-loops."""
    rnd = random.Random(seed)
    rows = set()
    while len(rows) < n_triples:
        h, t = rnd.sample(range(n_entities), 2)
        rows.add((f"e{h}", f"r{rnd.randrange(n_relations)}", f"e{t}"))
    return KnowledgeGraph.from_labeled(sorted(rows))


@pytest.fixture
def planted():
    rows, _ = planted_partition(2, 100, 0.1, 0.01, seed=7)
    return KnowledgeGraph.from_labeled(rows)


@pytest.fixture(autouse=True)
def _quiet_numba():
    logging.getLogger("numba").setLevel(logging.WARNING)


ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    line = f"{name}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
