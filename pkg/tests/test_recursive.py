import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_graph, rand_supply
from toggleflow.generators import complete_graph, grid_graph
from toggleflow.graph import dual_objective, primal_energy
from toggleflow.laplacian import all_cut_deltas
from toggleflow.oracles import electrical_flow, solve_laplacian_dense
from toggleflow.recursive import (
    RecursionParams,
    batch_increase,
    batch_size,
    contract_partition,
    optimal_batch_delta,
    outer_budget,
    recursion_beta,
    recursive_solve,
    spectral_approx_check,
    spectral_sparsify,
)
from toggleflow.tree import build_cut_table, low_stretch_tree
from toggleflow.treeflow import NaiveTreeFlow
from toggleflow.laplacian import cut_toggle_step


def tree_partition(T, cuts):
    """Label each vertex by its nearest ancestor among ``cuts`` (or the root)."""
    labels = np.zeros(T.n, dtype=np.int64)
    heads = [T.root] + sorted(set(int(c) for c in cuts), key=lambda v: T.tin[v])
    for k, h in enumerate(heads):
        labels[T.subtree(h)] = k
    return labels


class TestParams:
    def test_beta_default(self):
        assert recursion_beta(10, 0.01, 0.01) == pytest.approx(0.94939, abs=5e-6)
        assert RecursionParams().beta == recursion_beta(10, 0.01, 0.01)

    def test_batch_size_schedule(self):
        p = RecursionParams()
        assert batch_size(1200, 1200, 300, p) == int(np.ceil(1200 / np.sqrt(1200)))
        assert batch_size(5, 10**6, 300, p) == 1
        assert batch_size(10**6, 10**6, 300, p) == 299

    def test_outer_budget(self):
        assert outer_budget(100.0, 10, 0.1) == int(np.ceil(50 * np.log(10)))

    @pytest.mark.parametrize("kw", [{"n0": 1}, {"gamma": 1.0}, {"eps_prime": 0.0}, {"delta": 1.0}, {"c3": 0.0}, {"inner": "x"}])
    def test_rejects_bad_params(self, kw):
        with pytest.raises(ValueError):
            RecursionParams(**kw)


class TestContraction:
    def test_trivial_partition(self):
        G = rand_graph(8, 14, 1)
        b = rand_supply(8, 1)
        sys = contract_partition(G, np.zeros(8), np.arange(8), b)
        np.testing.assert_allclose(sys.L, G.laplacian(dense=True), atol=1e-14)
        np.testing.assert_allclose(sys.b, b)

    def test_single_part(self):
        G = rand_graph(8, 14, 1)
        sys = contract_partition(G, np.zeros(8), [np.arange(8)], rand_supply(8, 1))
        assert sys.k == 1
        np.testing.assert_allclose(sys.L, [[0.0]])
        assert sys.b[0] == pytest.approx(0.0, abs=1e-14)

    def test_triangle_split(self, triangle):
        sys = contract_partition(triangle, np.zeros(3), [[0], [1, 2]], [1.0, -1.0, 0.0])
        np.testing.assert_allclose(sys.L, [[2.0, -2.0], [-2.0, 2.0]])
        np.testing.assert_allclose(sys.b, [1.0, -1.0])

    def test_bad_partitions(self, triangle):
        with pytest.raises(ValueError, match="overlap"):
            contract_partition(triangle, np.zeros(3), [[0, 1], [1, 2]], np.zeros(3))
        with pytest.raises(ValueError, match="cover"):
            contract_partition(triangle, np.zeros(3), [[0], [1]], np.zeros(3))


class TestBatchDelta:
    def test_triangle_optimum(self, triangle):
        sys = contract_partition(triangle, np.zeros(3), [[0], [1, 2]], [1.0, -1.0, 0.0])
        delta = optimal_batch_delta(sys)
        np.testing.assert_allclose(delta, [0.25, -0.25], atol=1e-15)
        assert delta[0] - delta[1] == pytest.approx(0.5)
        assert batch_increase(sys, delta) == pytest.approx(0.25)
        # the lone cut {0}: step (b(C) - f(C)) R(C) = 1/2, gain 1/4
        assert batch_increase(sys, [0.5, 0.0]) == pytest.approx(0.25)

    def test_zero_rhs(self, triangle):
        sys = contract_partition(triangle, np.zeros(3), [[0], [1, 2]], np.zeros(3))
        np.testing.assert_array_equal(optimal_batch_delta(sys), 0.0)
        assert batch_increase(sys, optimal_batch_delta(sys)) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 40), st.integers(0, 60), st.integers(0, 10**6))
    def test_single_cut_reduces_to_toggle(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = low_stretch_tree(G)
        b = rand_supply(n, seed)
        x = np.random.default_rng(seed).normal(size=n)
        v = int(T.edges[seed % (n - 1)])
        sys = contract_partition(G, x, tree_partition(T, [v]), b)
        delta = optimal_batch_delta(sys)
        want = all_cut_deltas(G, T, x, b)[v]
        assert delta[1] - delta[0] == pytest.approx(want, rel=1e-9, abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 60), st.integers(0, 10**6))
    def test_increase_identity(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        rng = np.random.default_rng(seed)
        b = rand_supply(n, seed)
        x = rng.normal(size=n)
        k = int(rng.integers(1, n + 1))
        labels = np.concatenate([np.arange(k), rng.integers(k, size=n - k)])
        rng.shuffle(labels)
        sys = contract_partition(G, x, labels, b)
        delta = rng.normal(size=sys.k)
        gain = dual_objective(G, x + delta[labels], b) - dual_objective(G, x, b)
        assert batch_increase(sys, delta) == pytest.approx(gain, rel=1e-9, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 30), st.integers(0, 40), st.integers(0, 10**6))
    def test_dominates_sequential(self, n, extra, seed):
        G = rand_graph(n, n - 1 + extra, seed)
        T = low_stretch_tree(G)
        b = rand_supply(n, seed)
        tab = build_cut_table(G, T, b)
        rng = np.random.default_rng(seed)
        cuts = tab.sample(rng, int(rng.integers(1, n)))
        tf = NaiveTreeFlow(G, T, b)
        for v in cuts.tolist():
            cut_toggle_step(tf, v, tab.R[v])
        seq_gain = dual_objective(G, tf.value, b)
        sys = contract_partition(G, np.zeros(n), tree_partition(T, cuts), b)
        assert batch_increase(sys, optimal_batch_delta(sys)) >= seq_gain - 1e-10 * max(1, abs(seq_gain))


class TestSparsifier:
    def test_small_returned_unchanged(self):
        L = complete_graph(5).laplacian(dense=True)
        np.testing.assert_array_equal(spectral_sparsify(L, 0.1, np.random.default_rng(0)), L)

    def test_check_trivial_cases(self):
        L = grid_graph(4).laplacian(dense=True)
        assert spectral_approx_check(L, L, 0.0)
        assert not spectral_approx_check(L, 2 * L, 0.5)
        assert spectral_approx_check(L, 1.05 * L, 0.1)

    def test_check_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            spectral_approx_check(np.eye(2), np.eye(3), 0.1)

    @pytest.mark.parametrize("seed", range(5))
    def test_grid_sparsifier(self, seed):
        L = grid_graph(6).laplacian(dense=True)
        Ls = spectral_sparsify(L, 0.25, np.random.default_rng(seed))
        assert spectral_approx_check(L, Ls, 0.25)
        np.testing.assert_allclose(Ls.sum(axis=1), 0.0, atol=1e-9)


class TestRecursiveSolve:
    def test_small_graph_is_exact(self):
        G = rand_graph(8, 15, 2)
        b = rand_supply(8, 2)
        res = recursive_solve(G, b, 0.1, rng=0)
        assert res.trace.summary["gap"] == pytest.approx(0.0, abs=1e-10)

    def test_full_batch_is_one_exact_step(self):
        G = rand_graph(40, 100, 3)
        b = rand_supply(40, 3)
        params = RecursionParams(d=39, sparsify=False, max_outer=1)
        res = recursive_solve(G, b, 0.1, params, 0)
        np.testing.assert_allclose(res.x - res.x.mean(), solve_laplacian_dense(G, b), atol=1e-9)
        assert len(res.trace) == 1

    def test_genuine_recursion_converges_monotone(self):
        G = rand_graph(40, 120, 1)
        b = rand_supply(40, 1)
        params = RecursionParams(max_outer=60, min_sparsify=10)
        res = recursive_solve(G, b, 0.1, params, 1)
        assert res.trace.config["d"] < 39
        assert max(res.trace.column("parts")) > params.n0
        obj = res.trace.column("obj")
        assert np.all(np.diff(obj) >= 0.0)
        f_star, _ = electrical_flow(G, b)
        assert primal_energy(G, res.f) <= 1.3 * primal_energy(G, f_star)

    def test_bad_sparsifier_is_reverted(self):
        G = rand_graph(40, 120, 4)
        b = rand_supply(40, 4)
        params = RecursionParams(max_outer=20, inner="exact")
        res = recursive_solve(G, b, 0.1, params, 0, sparsifier=lambda L, g, rng: 0.02 * L)
        assert res.trace.summary["reverts"] > 0
        assert np.all(np.diff(res.trace.column("obj")) >= 0.0)

    def test_seed_determinism(self):
        G = rand_graph(30, 80, 5)
        b = rand_supply(30, 5)
        params = RecursionParams(max_outer=10)
        a = recursive_solve(G, b, 0.1, params, 3)
        c = recursive_solve(G, b, 0.1, params, 3)
        np.testing.assert_array_equal(a.x, c.x)
