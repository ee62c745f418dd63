import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path, rand_graph, rand_supply
from toggleflow.graph import Graph
from toggleflow.laplacian import dual_kosz
from toggleflow.tree import RootedTree, low_stretch_tree
from toggleflow.treeflow import (
    NaiveTreeFlow,
    TableTreeFlow,
    all_cut_flows,
    interaction_table,
    interaction_table_bruteforce,
)


def naive_cut_flow(G, T, x, v):
    """Oracle: literal sum of Ohm's-law flow over arcs leaving subtree(v)."""
    inside = set(T.subtree(v).tolist())
    total = 0.0
    for a, c, r in zip(G.tail.tolist(), G.head.tolist(), G.r.tolist()):
        if (a in inside) != (c in inside):
            s = 1.0 if a in inside else -1.0
            total += s * (x[a] - x[c]) / r
    return total


def star_triangle():
    G = Graph(3, [1, 2, 1], [0, 0, 2], [1.0, 1.0, 1.0])
    return G, RootedTree(G, [0, 1])


@pytest.mark.parametrize("cls", [NaiveTreeFlow, TableTreeFlow])
class TestExamples:
    def test_addvalue_path(self, cls):
        G = path(3)
        tf = cls(G, RootedTree(G, [0, 1]), np.zeros(3))
        tf.addvalue(1, 1.0)
        np.testing.assert_array_equal(tf.value, [0.0, 1.0, 1.0])

    def test_root_shift_changes_nothing(self, cls):
        G = rand_graph(12, 25, 1)
        T = low_stretch_tree(G)
        b = rand_supply(12, 1)
        tf = cls(G, T, b)
        tf.addvalue(4, 0.7)
        before = [tf.findflow(v) for v in range(12)]
        tf.addvalue(T.root, 3.5)
        np.testing.assert_allclose([tf.findflow(v) for v in range(12)], before, atol=1e-12)

    def test_triangle_crossing_edge(self, cls):
        G, T = star_triangle()
        tf = cls(G, T, np.zeros(3))
        before = tf.findflow(2), tf.cut_flow(2)
        tf.addvalue(1, 1.0)
        # more flow enters {2} over the unit arc (1, 2): its outflow drops by one
        assert tf.cut_flow(2) - before[1] == pytest.approx(-1.0)
        assert tf.findflow(2) - before[0] == pytest.approx(1.0)
        assert tf.cut_flow(2) == pytest.approx(naive_cut_flow(G, T, tf.value, 2))

    def test_findflow_at_zero(self, cls):
        G, T = star_triangle()
        tf = cls(G, T, [1.0, -1.0, 0.0])
        assert tf.findflow(1) == -1.0
        assert tf.findflow(T.root) == 0.0

    def test_fixed_point_has_zero_deficits(self, cls):
        G = rand_graph(15, 30, 2)
        b = rand_supply(15, 2)
        T = low_stretch_tree(G)
        x = dual_kosz(G, b, 1e-9, 0, tree=T).x
        tf = cls(G, T, b)
        for v in T.preorder.tolist():
            if v != T.root:
                tf.addvalue(v, x[v] - x[T.parent[v]])
        np.testing.assert_allclose(tf.value - tf.value[T.root], x - x[T.root], atol=1e-12)
        assert max(abs(tf.findflow(v)) for v in range(15)) < 1e-6


class TestInteractionTable:
    def test_diagonal_is_cut_conductance(self):
        G, T = star_triangle()
        H = interaction_table(G, T)
        assert H[1, 1] == pytest.approx(2.0)  # 1 / R(C) with R = 1/2
        assert H[1, 1] > 0

    def test_disjoint_cuts_without_crossing_edges(self):
        G = Graph(3, [1, 2], [0, 0], [1.0, 1.0])
        H = interaction_table(G, RootedTree(G, [0, 1]))
        assert H[1, 2] == 0.0 and H[2, 1] == 0.0

    def test_nested_path_cuts(self):
        G = Graph(4, [0, 1, 2, 0], [1, 2, 3, 3], [1.0, 1.0, 1.0, 2.0])
        T = RootedTree(G, [0, 1, 2])
        H = interaction_table(G, T)
        # C1 = {1,2,3} contains C2 = {2,3}; boundary arcs of C2 leaving C1: (3,0)
        assert H[1, 2] == pytest.approx(0.5)
        np.testing.assert_allclose(H, interaction_table_bruteforce(G, T), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_bruteforce(self, seed):
        G = rand_graph(9, 18, seed)
        T = low_stretch_tree(G)
        np.testing.assert_allclose(interaction_table(G, T), interaction_table_bruteforce(G, T), atol=1e-12)


class TestAllCutFlows:
    def test_zero_and_constant(self):
        G = rand_graph(10, 20, 3)
        T = low_stretch_tree(G)
        np.testing.assert_array_equal(all_cut_flows(G, T, np.zeros(10)), 0.0)
        np.testing.assert_allclose(all_cut_flows(G, T, np.full(10, 2.5)), 0.0, atol=1e-12)

    def test_random_matches_naive(self):
        G = rand_graph(30, 80, 4)
        T = low_stretch_tree(G)
        x = np.random.default_rng(4).normal(size=30)
        got = all_cut_flows(G, T, x)
        want = [naive_cut_flow(G, T, x, v) for v in range(30)]
        np.testing.assert_allclose(got, want, atol=1e-10)


class TestMetamorphic:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 40), st.integers(0, 10**6))
    def test_naive_and_table_agree(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = low_stretch_tree(G)
        b = rand_supply(n, seed)
        a, c = NaiveTreeFlow(G, T, b), TableTreeFlow(G, T, b)
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            v = int(rng.integers(n))
            if rng.random() < 0.5:
                x = float(rng.normal())
                a.addvalue(v, x)
                c.addvalue(v, x)
            else:
                assert abs(a.findflow(v) - c.findflow(v)) <= 1e-9
        np.testing.assert_allclose(c.f, c.recompute_all_cut_flows(), atol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 30), st.integers(0, 10**6))
    def test_cache_update_is_row_of_h(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = low_stretch_tree(G)
        tf = TableTreeFlow(G, T, np.zeros(n))
        rng = np.random.default_rng(seed)
        v, x = int(rng.integers(n)), float(rng.normal())
        tf.addvalue(v, x)
        want = [naive_cut_flow(G, T, tf.value, w) for w in range(n)]
        np.testing.assert_allclose(tf.f, want, atol=1e-10)
        np.testing.assert_allclose(tf.f, x * tf.H[v], atol=1e-12)
