import json

import pytest

from degid.graphmodel import MixedGraph


def iv_graph():
    # instrument 1, treatment 2, outcome 3, confounded 2 <-> 3
    return MixedGraph.build(3, [(1, 2), (2, 3)], [(2, 3)])


def fig1_graph():
    # L=1, T=2, A=3, Y=4
    return MixedGraph.build(4, [(1, 2), (1, 4), (2, 3), (3, 4)], [(3, 4)])


def fig3_graph():
    return MixedGraph.build(4, [(1, 2), (1, 4), (3, 4)], [(2, 3), (3, 4)])


def bow_graph():
    return MixedGraph.build(2, [(1, 2)], [(1, 2)])


def chain3():
    return MixedGraph.build(3, [(1, 2), (2, 3)])


@pytest.fixture
def write_graph(tmp_path):
    def write(graph, name="g.json"):
        path = tmp_path / name
        path.write_text(json.dumps(graph.to_json()))
        return str(path)

    return write


def pytest_configure(config):
    config.degid_acceptance = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "degid_acceptance", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        request.config.degid_acceptance.append((number, line))
        print(line)
        assert ok, line

    return record
