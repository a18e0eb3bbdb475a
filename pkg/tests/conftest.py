from functools import lru_cache

import numpy as np
import pytest

from quasirand.generator import SampleSpec, sample
from quasirand.graph import WeightedGraph
from quasirand.model import ModelGraph

ACCEPT_P = [[0.8, 0.1], [0.1, 0.7]]
ACCEPT_R = [0.5, 0.5]


def acceptance_model():
    return ModelGraph(ACCEPT_R, ACCEPT_P)


@lru_cache(maxsize=None)
def acceptance_sample(seed, n=500):
    h = acceptance_model()
    return sample(SampleSpec(h, n, seed=seed, fixed_sizes=(n // 2, n - n // 2)))


def complete_graph(n):
    return WeightedGraph(np.ones((n, n)) - np.eye(n))


def complete_bipartite(m1, m2):
    return WeightedGraph.from_edges(m1 + m2, [(u, m1 + v) for u in range(m1) for v in range(m2)])


def star(n):
    return WeightedGraph.from_edges(n, [(0, i) for i in range(1, n)])


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    A = np.triu((rng.random((n, n)) < p).astype(float), 1)
    return WeightedGraph(A + A.T)


@pytest.fixture
def model():
    return acceptance_model()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        ok, detail = lines[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
