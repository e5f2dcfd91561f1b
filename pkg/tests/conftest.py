import pytest

from cste.domain import TopologyConfig, build_random_topology
from cste.netsim import run_workload
from cste.trustgraph import build_graph

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def full_topology():
    return build_random_topology(TopologyConfig(), seed=42)


@pytest.fixture(scope="session")
def full_records(full_topology):
    return run_workload(full_topology, 5000, 1000, seed=7)


@pytest.fixture(scope="session")
def full_graph(full_records, full_topology):
    return build_graph(full_records, 0.6, 0.4, topology=full_topology)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def report(criterion: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f" :: {detail}" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
