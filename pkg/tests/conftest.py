import numpy as np
import pytest

from toggleflow.generators import log_uniform_resistances
from toggleflow.graph import Graph


def single_edge():
    return Graph(2, [0], [1], [1.0])


def unit_triangle():
    return Graph(3, [0, 1, 0], [1, 2, 2], [1.0, 1.0, 1.0])


def path(n, r=None):
    r = np.ones(n - 1) if r is None else r
    return Graph(n, np.arange(n - 1), np.arange(1, n), r)


def rand_graph(n, m, seed, rmax=10.0):
    """Random spanning tree plus distinct extra edges; always connected."""
    rng = np.random.default_rng(seed)
    m = min(max(m, n - 1), n * (n - 1) // 2)
    perm = rng.permutation(n)
    pairs = {tuple(sorted((int(perm[i]), int(perm[rng.integers(i)])))) for i in range(1, n)}
    while len(pairs) < m:
        u, v = rng.integers(n, size=2)
        if u != v:
            pairs.add((int(min(u, v)), int(max(u, v))))
    pairs = sorted(pairs)
    r = log_uniform_resistances(len(pairs), rmax, rng)
    return Graph(n, [u for u, _ in pairs], [v for _, v in pairs], r)


def rand_supply(n, seed):
    b = np.random.default_rng(seed).normal(size=n)
    return b - b.mean()


@pytest.fixture
def triangle():
    return unit_triangle()


@pytest.fixture
def edge():
    return single_edge()


ACCEPTANCE = {}


def record(number, ok, detail):
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
