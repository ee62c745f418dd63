"""Synthetic graphs and supplies for tests, demos and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .graph import DisconnectedGraphError, Graph

__all__ = [
    "path_graph",
    "cycle_graph",
    "grid_graph",
    "random_gnm",
    "random_regular",
    "complete_graph",
    "log_uniform_resistances",
    "st_supply",
    "random_supply",
    "generate",
    "KINDS",
]

KINDS = ("path", "cycle", "grid", "random-gnm", "random-regular")
MAX_RETRIES = 100


def log_uniform_resistances(m: int, rmax: float, rng) -> np.ndarray:
    """Resistances with log r uniform on [0, ln rmax]."""
    if rmax < 1.0:
        raise ValueError(f"rmax must be >= 1, got {rmax}")
    if rmax == 1.0:
        return np.ones(m)
    return np.exp(rng.uniform(0.0, math.log(rmax), m))


def _build(n, pairs, rmax, rng) -> Graph:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    r = log_uniform_resistances(len(pairs), rmax, rng)
    return Graph(n, pairs[:, 0], pairs[:, 1], r)


def path_graph(n: int, rmax: float = 1.0, rng=None) -> Graph:
    rng = np.random.default_rng(rng)
    return _build(n, [(i, i + 1) for i in range(n - 1)], rmax, rng)


def cycle_graph(n: int, rmax: float = 1.0, rng=None) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    rng = np.random.default_rng(rng)
    return _build(n, [(i, (i + 1) % n) for i in range(n)], rmax, rng)


def grid_graph(side: int, rmax: float = 1.0, rng=None) -> Graph:
    """side x side grid; vertex (i, j) is i * side + j."""
    if side < 1:
        raise ValueError("grid side must be positive")
    rng = np.random.default_rng(rng)
    pairs = []
    for i in range(side):
        for j in range(side):
            v = i * side + j
            if j + 1 < side:
                pairs.append((v, v + 1))
            if i + 1 < side:
                pairs.append((v, v + side))
    return _build(side * side, pairs, rmax, rng)


def complete_graph(n: int, rmax: float = 1.0, rng=None) -> Graph:
    rng = np.random.default_rng(rng)
    return _build(n, [(i, j) for i in range(n) for j in range(i + 1, n)], rmax, rng)


def random_gnm(n: int, m: int, rmax: float = 1.0, rng=None) -> Graph:
    """Uniform simple graph with m edges, redrawn until connected."""
    if m < n - 1:
        raise ValueError(f"a connected graph on {n} vertices needs m >= {n - 1}, got {m}")
    if m > n * (n - 1) // 2:
        raise ValueError(f"at most {n * (n - 1) // 2} edges fit on {n} vertices, got {m}")
    rng = np.random.default_rng(rng)
    iu, ju = np.triu_indices(n, 1)
    for _ in range(MAX_RETRIES):
        pick = np.sort(rng.choice(len(iu), size=m, replace=False))
        try:
            return _build(n, np.column_stack([iu[pick], ju[pick]]), rmax, rng)
        except DisconnectedGraphError:
            continue
    raise DisconnectedGraphError(f"no connected G(n={n}, m={m}) after {MAX_RETRIES} draws")


def random_regular(n: int, degree: int = 3, rmax: float = 1.0, rng=None) -> Graph:
    """Random degree-regular graph, redrawn until connected."""
    import networkx as nx

    rng = np.random.default_rng(rng)
    for _ in range(MAX_RETRIES):
        H = nx.random_regular_graph(degree, n, seed=int(rng.integers(2**32)))
        if nx.is_connected(H):
            return _build(n, sorted(tuple(sorted(e)) for e in H.edges()), rmax, rng)
    raise DisconnectedGraphError(f"no connected {degree}-regular graph on {n} vertices")


def st_supply(n: int, s: int = 0, t: int | None = None) -> np.ndarray:
    b = np.zeros(n)
    b[s] += 1.0
    b[n - 1 if t is None else t] -= 1.0
    return b


def random_supply(n: int, rng=None) -> np.ndarray:
    b = np.random.default_rng(rng).normal(size=n)
    return b - b.mean()


def generate(kind: str, n: int, m: int | None = None, seed: int = 0, rmax: float = 1.0, degree: int = 3):
    """Dispatch on ``kind``; for ``grid`` n is the side length."""
    rng = np.random.default_rng(seed)
    if kind == "path":
        return path_graph(n, rmax, rng)
    if kind == "cycle":
        return cycle_graph(n, rmax, rng)
    if kind == "grid":
        return grid_graph(n, rmax, rng)
    if kind == "random-gnm":
        if m is None:
            raise ValueError("random-gnm needs m")
        return random_gnm(n, m, rmax, rng)
    if kind == "random-regular":
        if m is not None:
            degree = max(1, round(2 * m / n))
        return random_regular(n, degree, rmax, rng)
    raise ValueError(f"unknown graph kind {kind!r}; expected one of {', '.join(KINDS)}")
