import itertools

import numpy as np
import pytest

from dssd.graph import Graph, is_connected, random_geometric_graph


def all_graphs(n):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for mask in range(1 << len(pairs)):
        yield Graph(n, [p for b, p in enumerate(pairs) if mask >> b & 1])


def random_graph(rng, n, p=0.4):
    return Graph(n, [(i, j) for i, j in itertools.combinations(range(1, n + 1), 2) if rng.random() < p])


def connected_rgg(rng, n, comm_range=None):
    comm_range = comm_range or 1.8 * np.sqrt(np.log(n) / (np.pi * n))
    while True:
        pts = rng.random((n, 2))
        g = random_geometric_graph(pts, comm_range)
        if is_connected(g):
            return g, pts


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_acceptance: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for n in getattr(report, "acceptance", ()):
        _acceptance.setdefault(n, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.acceptance = [m.args[0] for m in item.iter_markers("acceptance")]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        outcomes = _acceptance[n]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} "
                                    f"({outcomes.count('passed')}/{len(outcomes)} checks)")
