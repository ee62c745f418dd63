"""Cycle toggling (KOSZ) and cut toggling (dual KOSZ) for Lx = b.

Both solvers draw their iteration budget from the realised stretch of the
spanning tree they use, ``K = ceil(tau * ln(tau / eps))``.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .graph import (
    Graph,
    check_supply,
    dual_objective,
    flow_divergence,
    potential_defined_flow,
    primal_energy,
)
from .trace import SolveResult, SolverTrace, as_rng
from .tree import (
    CutTable,
    RootedTree,
    build_cut_table,
    fundamental_cycle,
    low_stretch_tree,
)
from .treeflow import NaiveTreeFlow, TableTreeFlow, all_cut_flows

__all__ = [
    "dual_kosz",
    "kosz",
    "cut_toggle_step",
    "cycle_toggle_step",
    "tree_defined_flow",
    "tree_defined_potentials",
    "complete_on_tree",
    "all_cut_deltas",
    "iteration_budget",
    "cycle_sampling_weights",
    "make_treeflow",
]


def _check_eps(eps):
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return eps


def iteration_budget(tau: float, eps: float) -> int:
    """ceil(tau * ln(tau / eps)), never negative."""
    if tau <= 0:
        return 0
    return max(0, math.ceil(tau * math.log(tau / eps)))


def make_treeflow(G: Graph, T: RootedTree, b, naive: bool = False):
    return NaiveTreeFlow(G, T, b) if naive else TableTreeFlow(G, T, b)


def cut_toggle_step(state, v: int, R_C: float) -> float:
    """Restore conservation across subtree(v): add (b(C) - f(C)) R(C) to it.

    ``state`` is a TreeFlow structure; returns the amount added.
    """
    delta = state.findflow(v) * R_C
    state.addvalue(v, delta)
    return delta


def all_cut_deltas(G: Graph, T: RootedTree, x, b, table: CutTable | None = None) -> np.ndarray:
    """Delta(C) = (b(C) - f(C)) R(C) for every subtree, indexed by child vertex."""
    table = build_cut_table(G, T, b) if table is None else table
    fc = all_cut_flows(G, T, x)
    out = (table.bC - fc) * np.nan_to_num(table.R)
    out[T.root] = 0.0
    return out


def tree_defined_flow(G: Graph, T: RootedTree, x, b) -> np.ndarray:
    """Ohm's-law flow off the tree, completed on the tree to an exact b-flow."""
    return complete_on_tree(G, T, potential_defined_flow(G, x), b)


def complete_on_tree(G: Graph, T: RootedTree, f, b) -> np.ndarray:
    """Keep ``f`` off the tree and set the tree arcs so that Af = b."""
    f = np.array(f, dtype=float)
    f[T.arcs] = 0.0
    need = np.asarray(b, dtype=float) - flow_divergence(G, f)
    # flow child -> parent must carry everything the subtree still has to emit
    s = T.subtree_sums(need)
    e = T.edges
    f[T.parent_arc[e]] = T.up_sign[e] * s[e]
    return f


def tree_defined_potentials(T: RootedTree, f, r) -> np.ndarray:
    """x(root) = 0 and x(child) = x(parent) + r f(child -> parent) on tree arcs."""
    f = np.asarray(f, dtype=float)
    r = np.asarray(r, dtype=float)
    e = T.edges
    pa = T.parent_arc[e]
    w = np.zeros(len(f))
    w[pa] = T.up_sign[e] * f[pa] * r[pa]
    return T.root_distance(w)


def dual_kosz(
    G: Graph,
    b,
    eps: float,
    rng=None,
    *,
    tree: RootedTree | None = None,
    naive: bool = False,
    track: bool = False,
    iterations: int | None = None,
) -> SolveResult:
    """Randomised cut toggling for the electrical dual.

    Parameters
    ----------
    G, b : graph and zero-sum supply.
    eps : float
        Target relative accuracy; sets ``K = ceil(tau ln(tau / eps))``.
    rng : Generator or int seed
    tree : RootedTree, optional
        Spanning tree to toggle on; defaults to :func:`low_stretch_tree`.
    naive : bool
        Use the O(m)-per-query TreeFlow instead of the interaction table.
    track : bool
        Record the exact dual objective after every step.
    iterations : int, optional
        Override ``K``.

    Returns
    -------
    SolveResult
        Potentials, their tree-defined flow and the trace.
    """
    start = time.perf_counter()
    eps = _check_eps(eps)
    b = check_supply(G, b)
    rng = as_rng(rng)
    T = low_stretch_tree(G) if tree is None else tree
    table = build_cut_table(G, T, b)
    K = iteration_budget(table.tau, eps) if iterations is None else int(iterations)
    trace = SolverTrace(config={"algo": "dual-kosz", "eps": eps, "tau": table.tau, "K": K})
    state = make_treeflow(G, T, b, naive=naive)
    cuts = table.sample(rng, K)
    R = table.R
    pa = T.parent_arc
    for t, v in enumerate(cuts.tolist(), 1):
        delta = cut_toggle_step(state, v, R[v])
        obj = dual_objective(G, state.value, b) if track else None
        trace.add(t, int(pa[v]), delta, obj)
    x = state.value.copy()
    f = tree_defined_flow(G, T, x, b)
    trace.summary.update(_summary(G, f, x, b, K, start))
    return SolveResult(x, f, trace)


def cycle_sampling_weights(G: Graph, T: RootedTree, r=None):
    """(non-tree arcs, cycle resistance / r) for the KOSZ cycle distribution."""
    r = G.r if r is None else np.asarray(r, dtype=float)
    nontree = np.flatnonzero(~T.is_tree_arc)
    if len(nontree) == 0:
        return nontree, np.zeros(0)
    path = T.path_weight(G, r, G.tail[nontree], G.head[nontree])
    return nontree, (path + r[nontree]) / r[nontree]


def cycle_toggle_step(G: Graph, f, cycle) -> float:
    """Route Delta around ``cycle`` so that sum r f vanishes on it; f updated in place."""
    arcs, signs = cycle
    r = G.r[arcs]
    delta = -float(np.dot(signs * r, f[arcs])) / float(r.sum())
    np.add.at(f, arcs, signs * delta)
    return delta


def _cycle_arrays(G, T, arc):
    cyc = fundamental_cycle(G, T, arc)
    return (
        np.fromiter((e for e, _ in cyc), dtype=np.int64, count=len(cyc)),
        np.fromiter((s for _, s in cyc), dtype=float, count=len(cyc)),
    )


def kosz(
    G: Graph,
    b,
    eps: float,
    rng=None,
    *,
    tree: RootedTree | None = None,
    track: bool = False,
    iterations: int | None = None,
) -> SolveResult:
    """Randomised cycle toggling from the tree b-flow.

    Non-tree arc ``e`` is drawn with probability proportional to the
    resistance of its fundamental cycle over ``r(e)``; the normaliser of
    these weights sets ``K = ceil(tau' ln(tau' / eps))``.  Returns the flow,
    the tree-defined potentials (root at 0) and the trace.
    """
    start = time.perf_counter()
    eps = _check_eps(eps)
    b = check_supply(G, b)
    rng = as_rng(rng)
    T = low_stretch_tree(G) if tree is None else tree
    f = tree_defined_flow(G, T, np.zeros(G.n), b)
    nontree, weights = cycle_sampling_weights(G, T)
    tau = float(weights.sum())
    K = iteration_budget(tau, eps) if iterations is None else int(iterations)
    if len(nontree) == 0:
        K = 0
    trace = SolverTrace(config={"algo": "kosz", "eps": eps, "tau": tau, "K": K})
    if K:
        cdf = np.cumsum(weights / tau)
        cdf[-1] = 1.0
        picks = nontree[np.minimum(np.searchsorted(cdf, rng.random(K), side="right"), len(cdf) - 1)]
        cache = {}
        for t, a in enumerate(picks.tolist(), 1):
            cyc = cache.get(a)
            if cyc is None:
                cyc = cache[a] = _cycle_arrays(G, T, a)
            delta = cycle_toggle_step(G, f, cyc)
            trace.add(t, a, delta, primal_energy(G, f) if track else None)
    x = tree_defined_potentials(T, f, G.r)
    trace.summary.update(_summary(G, f, x, b, K, start))
    return SolveResult(x, f, trace)


def _summary(G, f, x, b, K, start, p=2.0):
    energy = primal_energy(G, f, p)
    dual = dual_objective(G, x, b, p)
    return {
        "iterations_run": int(K),
        "final_energy": energy,
        "final_dual": dual,
        "gap": energy - dual,
        "wall_ms": 1000.0 * (time.perf_counter() - start),
    }
