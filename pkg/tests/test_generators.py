import numpy as np
import pytest

from toggleflow.generators import (
    complete_graph,
    cycle_graph,
    generate,
    grid_graph,
    log_uniform_resistances,
    path_graph,
    random_gnm,
    random_regular,
    random_supply,
    st_supply,
)


def test_path_and_grid_sizes():
    assert path_graph(3).m == 2
    G = grid_graph(4)
    assert (G.n, G.m) == (16, 24)
    assert cycle_graph(5).m == 5
    assert complete_graph(20).m == 190


def test_gnm_connected_and_simple():
    G = random_gnm(100, 300, 10.0, np.random.default_rng(0))
    assert (G.n, G.m) == (100, 300)
    pairs = set(zip(G.tail.tolist(), G.head.tolist()))
    assert len(pairs) == 300


def test_gnm_rejects_too_few_edges():
    with pytest.raises(ValueError, match="m >= 9"):
        random_gnm(10, 8)


def test_regular_degree():
    G = random_regular(20, 3, rng=np.random.default_rng(1))
    assert np.all(np.bincount(np.r_[G.tail, G.head]) == 3)


def test_resistances_in_range():
    r = log_uniform_resistances(1000, 10.0, np.random.default_rng(2))
    assert r.min() >= 1.0 and r.max() <= 10.0
    np.testing.assert_array_equal(log_uniform_resistances(5, 1.0, None), 1.0)


def test_supplies():
    np.testing.assert_array_equal(st_supply(4), [1.0, 0.0, 0.0, -1.0])
    b = random_supply(10, np.random.default_rng(3))
    assert abs(b.sum()) < 1e-12


def test_generate_deterministic():
    a = generate("random-gnm", 30, 60, seed=5, rmax=4.0)
    c = generate("random-gnm", 30, 60, seed=5, rmax=4.0)
    np.testing.assert_array_equal(a.r, c.r)
    with pytest.raises(ValueError, match="unknown graph kind"):
        generate("star", 5)
