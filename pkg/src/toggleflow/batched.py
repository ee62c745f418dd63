"""Dual KOSZ in blocks of pre-sampled cuts.

A block samples its ``l`` cuts up front, contracts every tree edge that was
not sampled, runs the toggles on the contracted tree with an ``l x l``
interaction table, and finally pushes the accumulated potential changes
back to the full graph and refreshes every cut flow in one O(m) pass.
Given the same tree and generator state the sequence of sampled cuts, and
hence the output, matches :func:`toggleflow.laplacian.dual_kosz`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, check_supply, dual_objective
from .laplacian import _check_eps, _summary, iteration_budget, tree_defined_flow
from .trace import SolveResult, SolverTrace, as_rng
from .tree import RootedTree, build_cut_table, low_stretch_tree
from .treeflow import all_cut_flows

__all__ = [
    "ContractedBlock",
    "contract_block",
    "propagate_block",
    "run_block",
    "batched_dual_kosz",
    "default_batch",
]


def default_batch(m: int) -> int:
    return max(1, math.ceil(math.sqrt(m)))


@dataclass(frozen=True)
class ContractedBlock:
    """Tree with every unsampled edge contracted.

    Attributes
    ----------
    super_vertices : ndarray
        Original vertex heading each super vertex (root first, then sampled
        children in preorder).
    vertex_map : ndarray
        Super vertex index of every original vertex.
    parent : ndarray
        Parent super vertex in the contracted tree (-1 at the root).
    tail, head, r : ndarray
        Arcs between distinct super vertices, parallel arcs kept.
    """

    super_vertices: np.ndarray
    vertex_map: np.ndarray
    parent: np.ndarray
    tail: np.ndarray
    head: np.ndarray
    r: np.ndarray

    @property
    def k(self) -> int:
        return len(self.super_vertices)

    def laplacian(self) -> np.ndarray:
        c = 1.0 / self.r
        k = self.k
        W = sp.coo_matrix((c, (self.tail, self.head)), shape=(k, k)).toarray()
        W = W + W.T
        return np.diag(W.sum(axis=1)) - W

    def indicator(self) -> np.ndarray:
        """k x k matrix: column j flags the super vertices in subtree(j)."""
        k = self.k
        X = np.eye(k)
        # parents precede children in super_vertices order
        for j in range(k - 1, 0, -1):
            X[:, self.parent[j]] += X[:, j]
        return X


def _nearest_marked_ancestor(T: RootedTree, marked: np.ndarray) -> np.ndarray:
    anc = np.where(marked, np.arange(T.n), T.parent)
    anc[T.root] = T.root
    while True:
        nxt = anc[anc]
        if np.array_equal(nxt, anc):
            return anc
        anc = nxt


def contract_block(G: Graph, T: RootedTree, sampled) -> ContractedBlock:
    """Contract all tree edges whose child is not in ``sampled``."""
    sampled = np.unique(np.asarray(sampled, dtype=np.int64))
    if np.any(T.parent[sampled] < 0):
        raise ValueError("the root does not name a tree edge")
    marked = np.zeros(T.n, dtype=bool)
    marked[sampled] = True
    marked[T.root] = True
    leader = _nearest_marked_ancestor(T, marked)
    heads = np.flatnonzero(marked)
    heads = heads[np.argsort(T.tin[heads], kind="stable")]
    index = np.full(T.n, -1, dtype=np.int64)
    index[heads] = np.arange(len(heads))
    vmap = index[leader]
    parent = np.full(len(heads), -1, dtype=np.int64)
    parent[1:] = vmap[T.parent[heads[1:]]]
    a, c = vmap[G.tail], vmap[G.head]
    keep = a != c
    return ContractedBlock(heads, vmap, parent, a[keep], c[keep], G.r[keep])


def propagate_block(x, block_y, vertex_map, G: Graph | None = None, T: RootedTree | None = None):
    """x(i) += y(super vertex of i); with G and T also return every f(C)."""
    x = np.asarray(x, dtype=float) + np.asarray(block_y, dtype=float)[vertex_map]
    if G is None or T is None:
        return x
    return x, all_cut_flows(G, T, x)


def run_block(G: Graph, T: RootedTree, table, x, fC, cuts):
    """Apply the cut toggles ``cuts`` in order on the contracted tree.

    ``fC`` holds f(C) for every subtree at ``x``.  Returns the new
    potentials, their cut flows and the step taken at each cut.
    """
    cuts = np.asarray(cuts, dtype=np.int64)
    blk = contract_block(G, T, cuts)
    X = blk.indicator()
    H = X.T @ blk.laplacian() @ X
    local = blk.vertex_map[cuts]
    f_loc = fC[blk.super_vertices].copy()
    S_loc = table.bC[blk.super_vertices]
    R_loc = table.R[blk.super_vertices]
    acc = np.zeros(blk.k)
    deltas = np.empty(len(cuts))
    for i, j in enumerate(local.tolist()):
        delta = (S_loc[j] - f_loc[j]) * R_loc[j]
        acc[j] += delta
        f_loc += delta * H[j]
        deltas[i] = delta
    x, fC = propagate_block(x, X @ acc, blk.vertex_map, G, T)
    return x, fC, deltas


def batched_dual_kosz(
    G: Graph,
    b,
    eps: float,
    l: int | None = None,
    rng=None,
    *,
    tree: RootedTree | None = None,
    track: bool = False,
    iterations: int | None = None,
) -> SolveResult:
    """Dual KOSZ processed in blocks of ``l`` cuts (default ``ceil(sqrt(m))``).

    With ``track`` the exact dual objective is recorded on the last
    iteration of each block, where the full potentials exist.
    """
    start = time.perf_counter()
    eps = _check_eps(eps)
    b = check_supply(G, b)
    rng = as_rng(rng)
    l = default_batch(G.m) if l is None else int(l)
    if l < 1:
        raise ValueError(f"batch size must be >= 1, got {l}")
    T = low_stretch_tree(G) if tree is None else tree
    table = build_cut_table(G, T, b)
    K = iteration_budget(table.tau, eps) if iterations is None else int(iterations)
    trace = SolverTrace(config={"algo": "batched", "eps": eps, "tau": table.tau, "K": K, "l": l})
    x = np.zeros(G.n)
    fC = np.zeros(G.n)
    t = 0
    blocks = 0
    while t < K:
        cuts = table.sample(rng, min(l, K - t))
        x, fC, deltas = run_block(G, T, table, x, fC, cuts)
        for i, (v, delta) in enumerate(zip(cuts.tolist(), deltas.tolist())):
            t += 1
            obj = dual_objective(G, x, b) if track and i == len(cuts) - 1 else None
            trace.add(t, int(T.parent_arc[v]), delta, obj)
        blocks += 1
    f = tree_defined_flow(G, T, x, b)
    trace.summary.update(_summary(G, f, x, b, K, start))
    trace.summary["blocks"] = blocks
    return SolveResult(x, f, trace)
