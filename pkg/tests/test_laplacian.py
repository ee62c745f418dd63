import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path, rand_graph, rand_supply, single_edge
from toggleflow.graph import Graph, dual_objective, duality_gap, flow_divergence, primal_energy
from toggleflow.laplacian import (
    all_cut_deltas,
    cut_toggle_step,
    cycle_toggle_step,
    dual_kosz,
    iteration_budget,
    kosz,
    tree_defined_flow,
    tree_defined_potentials,
)
from toggleflow.oracles import electrical_flow, solve_laplacian_dense
from toggleflow.tree import RootedTree, build_cut_table, fundamental_cycle, low_stretch_tree
from toggleflow.treeflow import NaiveTreeFlow


def star_triangle():
    G = Graph(3, [1, 2, 1], [0, 0, 2], [1.0, 1.0, 1.0])
    return G, RootedTree(G, [0, 1])


def random_tree(G, seed):
    rng = np.random.default_rng(seed)
    return low_stretch_tree(G, rng.uniform(0.5, 2.0, G.m) * G.r, max_swaps=0, root=int(rng.integers(G.n)))


class TestCutToggle:
    def test_single_edge_one_step(self, edge):
        res = dual_kosz(edge, [1.0, -1.0], 0.5, 0, iterations=1)
        # root 0, so the cut is {1} with b(C) = -1
        assert res.trace.records[0]["delta"] == pytest.approx(-1.0)
        assert res.x[0] - res.x[1] == pytest.approx(1.0)
        assert res.f[0] == pytest.approx(1.0)
        assert res.trace.summary["gap"] == pytest.approx(0.0, abs=1e-15)

    def test_triangle_first_cut(self):
        G, T = star_triangle()
        b = np.array([1.0, -1.0, 0.0])
        tab = build_cut_table(G, T, b)
        tf = NaiveTreeFlow(G, T, b)
        before = dual_objective(G, tf.value, b)
        delta = cut_toggle_step(tf, 1, tab.R[1])
        assert delta == pytest.approx(-0.5)
        assert dual_objective(G, tf.value, b) - before == pytest.approx(0.25)

    def test_conserving_cut_has_zero_step(self):
        G, T = star_triangle()
        tf = NaiveTreeFlow(G, T, np.zeros(3))
        assert cut_toggle_step(tf, 2, 0.5) == 0.0

    def test_budget(self):
        assert iteration_budget(4.0, 0.1) == int(np.ceil(4 * np.log(40)))
        assert iteration_budget(0.0, 0.1) == 0

    def test_rejects_bad_eps(self, edge):
        with pytest.raises(ValueError, match="eps"):
            dual_kosz(edge, [1.0, -1.0], 0.0)

    def test_converges_on_random_graph(self):
        G = rand_graph(40, 100, 8)
        b = rand_supply(40, 8)
        f_star, _ = electrical_flow(G, b)
        res = dual_kosz(G, b, 0.01, 1)
        assert primal_energy(G, res.f) <= 1.05 * primal_energy(G, f_star)

    def test_naive_and_table_identical(self):
        G = rand_graph(20, 50, 9)
        b = rand_supply(20, 9)
        a = dual_kosz(G, b, 0.1, 3, naive=True)
        c = dual_kosz(G, b, 0.1, 3)
        np.testing.assert_allclose(a.x, c.x, atol=1e-10)

    def test_trace_is_deterministic_and_monotone(self):
        G = rand_graph(25, 60, 10)
        b = rand_supply(25, 10)
        a = dual_kosz(G, b, 0.1, 5, track=True)
        c = dual_kosz(G, b, 0.1, 5, track=True)
        assert a.trace.elements() == c.trace.elements()
        obj = a.trace.column("obj")
        assert np.all(np.diff(obj) >= -1e-12 * max(1, abs(obj).max()))
        assert all(G.tail[e] >= 0 for e in a.trace.elements())


class TestTreeDefinedFlow:
    def test_optimal_x_gives_electrical_flow(self):
        G = rand_graph(20, 45, 11)
        b = rand_supply(20, 11)
        f_star, x_star = electrical_flow(G, b)
        np.testing.assert_allclose(tree_defined_flow(G, low_stretch_tree(G), x_star, b), f_star, atol=1e-10)

    def test_zero_potentials_route_on_tree(self):
        G = rand_graph(20, 45, 12)
        b = rand_supply(20, 12)
        T = low_stretch_tree(G)
        f = tree_defined_flow(G, T, np.zeros(20), b)
        assert np.all(f[~T.is_tree_arc] == 0.0)
        np.testing.assert_allclose(flow_divergence(G, f), b, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 60), st.integers(0, 10**6))
    def test_gap_is_weighted_tree_sum(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = random_tree(G, seed)
        b = rand_supply(n, seed)
        x = np.random.default_rng(seed).normal(size=n)
        tab = build_cut_table(G, T, b)
        f = tree_defined_flow(G, T, x, b)
        d = all_cut_deltas(G, T, x, b, tab)
        e = T.edges
        want = 0.5 * np.sum(tab.r_tree[e] * d[e] ** 2 / tab.R[e] ** 2)
        assert duality_gap(G, f, x, b) == pytest.approx(want, rel=1e-10, abs=1e-12)


class TestPotentialsFromFlow:
    def test_triangle_optimum(self, triangle):
        T = RootedTree(triangle, [0, 1], root=1)
        x = tree_defined_potentials(T, [2 / 3, -1 / 3, 1 / 3], triangle.r)
        np.testing.assert_allclose(x, [2 / 3, 0.0, 1 / 3], atol=1e-15)

    def test_zero_flow(self, triangle):
        np.testing.assert_array_equal(tree_defined_potentials(low_stretch_tree(triangle), np.zeros(3), triangle.r), 0.0)

    def test_path_prefix_sums(self):
        r = np.array([1.0, 2.0, 3.0])
        G = path(4, r)
        T = RootedTree(G, [0, 1, 2], root=0)
        f = np.array([0.5, -1.0, 2.0])
        # x(child) = x(parent) - r f for arcs oriented parent -> child
        np.testing.assert_allclose(tree_defined_potentials(T, f, r), -np.cumsum(np.r_[0.0, r * f]))


class TestCycleToggle:
    def test_triangle_one_step(self):
        G = Graph(3, [0, 1, 0], [1, 2, 2], [1.0, 1.0, 1.0])
        T = RootedTree(G, [0, 1])
        b = np.array([1.0, -1.0, 0.0])
        f = tree_defined_flow(G, T, np.zeros(3), b)
        np.testing.assert_array_equal(f, [1.0, 0.0, 0.0])
        cyc = fundamental_cycle(G, T, 2)
        arcs = np.array([a for a, _ in cyc])
        signs = np.array([s for _, s in cyc], dtype=float)
        # the cycle runs along arc (0, 2), against arc (0, 1)
        assert cycle_toggle_step(G, f, (arcs, signs)) == pytest.approx(1 / 3)
        np.testing.assert_allclose(f, [2 / 3, -1 / 3, 1 / 3])

    def test_tree_graph_needs_no_iterations(self):
        G = path(5, np.arange(1.0, 5.0))
        b = rand_supply(5, 0)
        res = kosz(G, b, 0.1, 0)
        assert res.trace.config["K"] == 0
        assert res.trace.summary["gap"] == pytest.approx(0.0, abs=1e-12)

    def test_energy_monotone_and_feasible(self):
        G = rand_graph(100, 300, 13)
        b = rand_supply(100, 13)
        res = kosz(G, b, 0.1, 2, track=True, iterations=3000)
        e = res.trace.column("obj")
        assert np.all(np.diff(e) <= 1e-12 * e[0])
        np.testing.assert_allclose(flow_divergence(G, res.f), b, atol=1e-10)

    def test_kosz_converges(self):
        G = rand_graph(40, 100, 14)
        b = rand_supply(40, 14)
        f_star, _ = electrical_flow(G, b)
        res = kosz(G, b, 0.01, 3)
        assert primal_energy(G, res.f) <= 1.05 * primal_energy(G, f_star)


class TestIdentities:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 60), st.integers(0, 10**6))
    def test_step_increase(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = random_tree(G, seed)
        b = rand_supply(n, seed)
        tab = build_cut_table(G, T, b)
        tf = NaiveTreeFlow(G, T, b)
        rng = np.random.default_rng(seed)
        tf.addvalue(int(rng.integers(n)), float(rng.normal()))
        for v in tab.sample(rng, 20).tolist():
            before = dual_objective(G, tf.value, b)
            delta = cut_toggle_step(tf, v, tab.R[v])
            gain = dual_objective(G, tf.value, b) - before
            scale = max(1.0, delta**2 / tab.R[v])
            assert abs(gain - delta**2 / (2 * tab.R[v])) <= 1e-10 * scale

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 60), st.integers(0, 10**6))
    def test_rounding_identity(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        b = rand_supply(n, seed)
        x_star = solve_laplacian_dense(G, b)
        x = np.random.default_rng(seed).normal(size=n)
        d = x_star - x
        lhs = 0.5 * d @ (G.laplacian(dense=True) @ d)
        rhs = dual_objective(G, x_star, b) - dual_objective(G, x, b)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-10)
