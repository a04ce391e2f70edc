import numpy as np
import pytest

from gclbench.graph import Graph, Partition

_ACCEPTANCE: dict = {}


def complete_edges(nodes):
    nodes = list(nodes)
    return [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1:]]


@pytest.fixture
def k3():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def two_k3_bridge():
    g = Graph.from_edges(6, complete_edges(range(3)) + complete_edges(range(3, 6)) + [(2, 3)])
    return g, Partition([0, 0, 0, 1, 1, 1])


@pytest.fixture
def two_k5_bridge():
    g = Graph.from_edges(10, complete_edges(range(5)) + complete_edges(range(5, 10)) + [(4, 5)])
    return g, Partition([0] * 5 + [1] * 5)


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    keep = rng.random(iu[0].size) < p
    return Graph.from_edges(n, np.column_stack([iu[0][keep], iu[1][keep]]))


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and "::test_criterion_" in report.nodeid:
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            name = report.nodeid.split("::")[-1]
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: (int(s.split("_")[2]), s)):
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else _ACCEPTANCE[name].upper()
        terminalreporter.write_line(f"{verdict:7s} {name}")
