"""Rooted spanning trees, stretch, fundamental cuts and cycles, cut tables.

A tree edge is named by its child vertex ``v``: the edge joins ``v`` to
``parent[v]`` and its fundamental cut is the vertex set of the subtree rooted
at ``v``.  Subtrees are contiguous ranges of the DFS preorder, so membership
tests and subtree sums are O(1) per query after an O(n) prefix sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import depth_first_order, minimum_spanning_tree

from .graph import Graph, GraphError

__all__ = [
    "RootedTree",
    "CutTable",
    "Cut",
    "low_stretch_tree",
    "minimum_spanning_tree_arcs",
    "total_stretch",
    "arc_stretches",
    "fundamental_cut",
    "fundamental_cycle",
    "build_cut_table",
    "crossing_sums",
]


class RootedTree:
    """Spanning tree of a :class:`Graph` rooted at ``root``.

    Attributes
    ----------
    parent : ndarray
        Parent of every vertex, ``-1`` at the root.
    parent_arc : ndarray
        Graph arc joining a vertex to its parent, ``-1`` at the root.
    up_sign : ndarray
        ``+1`` if ``parent_arc[v]`` is oriented ``v -> parent[v]``, else ``-1``.
    depth, preorder, tin, tout : ndarray
        Depth; DFS preorder; subtree of v is ``preorder[tin[v]:tout[v]]``.
    """

    def __init__(self, G: Graph, arcs, root: int = 0):
        arcs = np.asarray(arcs, dtype=np.int64).reshape(-1)
        n = G.n
        if len(arcs) != n - 1:
            raise GraphError(f"a spanning tree on {n} vertices needs {n - 1} arcs, got {len(arcs)}")
        self.n = n
        self.root = int(root)
        u, v = G.tail[arcs], G.head[arcs]
        # data = arc id + 1 so that arc 0 is not an implicit zero
        M = sp.csr_matrix(
            (np.concatenate([arcs, arcs]) + 1, (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        )
        order, pred = depth_first_order(M, self.root, directed=False, return_predecessors=True)
        if len(order) != n:
            raise GraphError("arcs do not span the graph")
        pred = pred.astype(np.int64)
        pred[self.root] = -1
        parent_arc = np.full(n, -1, dtype=np.int64)
        nonroot = np.flatnonzero(pred >= 0)
        parent_arc[nonroot] = np.asarray(M[nonroot, pred[nonroot]]).ravel().astype(np.int64) - 1
        self.parent = pred
        self.parent_arc = parent_arc
        self.up_sign = np.zeros(n, dtype=np.int64)
        self.up_sign[nonroot] = np.where(G.tail[parent_arc[nonroot]] == nonroot, 1, -1)
        self.preorder = order.astype(np.int64)
        self.tin = np.empty(n, dtype=np.int64)
        self.tin[self.preorder] = np.arange(n)
        size = np.ones(n, dtype=np.int64)
        for w in self.preorder[::-1][:-1].tolist():
            size[pred[w]] += size[w]
        self.size = size
        self.tout = self.tin + size
        self.depth = self.root_distance(np.ones(G.m)).astype(np.int64)
        self.arcs = np.sort(arcs)
        self.is_tree_arc = np.zeros(G.m, dtype=bool)
        self.is_tree_arc[arcs] = True
        self.edges = nonroot  # tree edges named by child vertex, ascending
        self._lift = None

    # -- structure queries ---------------------------------------------------

    def in_subtree(self, u, v):
        """Whether u lies in the subtree rooted at v (vectorised over u and v)."""
        tu = self.tin[u]
        return (self.tin[v] <= tu) & (tu < self.tout[v])

    def subtree(self, v: int) -> np.ndarray:
        return self.preorder[self.tin[v] : self.tout[v]]

    def subtree_sums(self, values) -> np.ndarray:
        """Sum of ``values`` over every subtree, indexed by subtree root."""
        values = np.asarray(values, dtype=float)
        prefix = np.concatenate([[0.0], np.cumsum(values[self.preorder])])
        return prefix[self.tout] - prefix[self.tin]

    def root_distance(self, arc_weights) -> np.ndarray:
        """Sum of ``arc_weights`` over tree arcs on each vertex's path to the root."""
        w = np.zeros(self.n)
        nr = self.parent_arc >= 0
        w[nr] = np.asarray(arc_weights, dtype=float)[self.parent_arc[nr]]
        # an edge weight applies to the whole subtree below it: range-add on preorder
        diff = np.zeros(self.n + 1)
        np.add.at(diff, self.tin, w)
        np.add.at(diff, self.tout, -w)
        acc = np.cumsum(diff)[: self.n]
        return acc[self.tin]

    def lca(self, u, v) -> np.ndarray:
        """Lowest common ancestor, vectorised (binary lifting)."""
        if self._lift is None:
            up = np.where(self.parent >= 0, self.parent, self.root)
            table = [up]
            for _ in range(max(1, int(self.depth.max()).bit_length())):
                table.append(table[-1][table[-1]])
            self._lift = table
        u = np.array(u, dtype=np.int64, ndmin=1)
        v = np.array(v, dtype=np.int64, ndmin=1)
        du, dv = self.depth[u], self.depth[v]
        swap = du < dv
        u, v = np.where(swap, v, u), np.where(swap, u, v)
        diff = np.abs(du - dv)
        for k, up in enumerate(self._lift):
            sel = (diff >> k) & 1 == 1
            if np.any(sel):
                u[sel] = up[u[sel]]
        for up in reversed(self._lift):
            sel = up[u] != up[v]
            u = np.where(sel, up[u], u)
            v = np.where(sel, up[v], v)
        return np.where(u == v, u, self._lift[0][u])

    def path_weight(self, G: Graph, arc_weights, u, v) -> np.ndarray:
        d = self.root_distance(arc_weights)
        return d[u] + d[v] - 2.0 * d[self.lca(u, v)]

    def child_of_arc(self, arc: int) -> int:
        """Child vertex naming the tree edge realised by ``arc``."""
        if not self.is_tree_arc[arc]:
            raise ValueError(f"arc {arc} is not a tree arc")
        hits = np.flatnonzero(self.parent_arc == arc)
        return int(hits[0])

    def path_to_ancestor(self, u: int, a: int) -> List[int]:
        """Vertices strictly below ``a`` on the path from ``u`` up to ``a``."""
        out = []
        parent = self.parent
        while u != a:
            out.append(u)
            u = int(parent[u])
        return out

    def __repr__(self):
        return f"RootedTree(n={self.n}, root={self.root}, height={int(self.depth.max())})"


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def minimum_spanning_tree_arcs(G: Graph, weights) -> np.ndarray:
    """Arc indices of a minimum spanning tree under ``weights``.

    Parallel arcs are reduced to the lightest one (lowest index on ties)
    before handing the simple graph to scipy.
    """
    weights = np.asarray(weights, dtype=float)
    if G.n == 1:
        return np.zeros(0, dtype=np.int64)
    lo = np.minimum(G.tail, G.head)
    hi = np.maximum(G.tail, G.head)
    order = np.lexsort((np.arange(G.m), weights, hi, lo))
    key = lo[order] * G.n + hi[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = key[1:] != key[:-1]
    best = order[first]
    lookup = sp.csr_matrix((best + 1, (lo[best], hi[best])), shape=(G.n, G.n))
    W = sp.csr_matrix((weights[best], (lo[best], hi[best])), shape=(G.n, G.n))
    mst = minimum_spanning_tree(W).tocoo()
    arcs = np.asarray(lookup[mst.row, mst.col]).ravel().astype(np.int64) - 1
    if len(arcs) != G.n - 1:
        raise GraphError("graph is disconnected")
    return arcs


def arc_stretches(G: Graph, T: RootedTree, weights) -> np.ndarray:
    """Per-arc stretch: tree-path weight between the endpoints over the arc weight."""
    weights = np.asarray(weights, dtype=float)
    return T.path_weight(G, weights, G.tail, G.head) / weights


def total_stretch(G: Graph, T: RootedTree, weights) -> float:
    """sum over all arcs of (1/w_e) * sum of w over the tree path of e."""
    s = arc_stretches(G, T, weights)
    # tree arcs have stretch exactly 1; pin them against rounding
    s[T.is_tree_arc] = 1.0
    return float(np.sum(s))


def low_stretch_tree(
    G: Graph, weights=None, max_swaps: Optional[int] = None, root: int = 0
) -> RootedTree:
    """Spanning tree of low total stretch with respect to ``weights``.

    Minimum spanning tree under ``weights``, followed by one hill-climbing
    pass: for every non-tree arc, in decreasing order of stretch, try
    exchanging it for the heaviest tree arc on its fundamental cycle and
    keep the exchange when total stretch strictly drops.

    Parameters
    ----------
    weights : array_like, optional
        Positive weight per arc (lengths); defaults to the resistances.
    max_swaps : int, optional
        Cap on exchange attempts, ``2 m`` by default; ``0`` returns the MST.
    """
    weights = G.r if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (G.m,) or np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError("weights must be positive and finite, one per arc")
    arcs = minimum_spanning_tree_arcs(G, weights)
    T = RootedTree(G, arcs, root)
    budget = 2 * G.m if max_swaps is None else int(max_swaps)
    if budget <= 0 or G.m == G.n - 1:
        return T
    best = total_stretch(G, T, weights)
    st = arc_stretches(G, T, weights)
    candidates = [int(a) for a in np.argsort(-st, kind="stable") if not T.is_tree_arc[a]]
    attempts = 0
    for a in candidates:
        if attempts >= budget:
            break
        if T.is_tree_arc[a]:
            continue
        attempts += 1
        cyc = [e for e, _ in fundamental_cycle(G, T, a)[1:]]
        out = max(cyc, key=lambda e: (weights[e], -e))
        trial_arcs = np.concatenate([T.arcs[T.arcs != out], [a]])
        trial = RootedTree(G, trial_arcs, root)
        val = total_stretch(G, trial, weights)
        if val < best * (1.0 - 1e-12):
            T, best = trial, val
    return T


# ---------------------------------------------------------------------------
# cuts and cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cut:
    """Fundamental cut of tree edge ``child -> parent``: the subtree of ``child``."""

    tree: RootedTree
    child: int

    def __contains__(self, u) -> bool:
        return bool(self.tree.in_subtree(u, self.child))

    def members(self) -> np.ndarray:
        return np.sort(self.tree.subtree(self.child))

    def boundary(self, G: Graph) -> Tuple[np.ndarray, np.ndarray]:
        """Arcs crossing the cut and their sign (+1 when the tail is inside)."""
        a = self.tree.in_subtree(G.tail, self.child)
        b = self.tree.in_subtree(G.head, self.child)
        arcs = np.flatnonzero(a != b)
        return arcs, np.where(a[arcs], 1, -1)


def fundamental_cut(T: RootedTree, child: int) -> Cut:
    if not 0 <= child < T.n or T.parent[child] < 0:
        raise ValueError(f"vertex {child} does not name a tree edge (root or out of range)")
    return Cut(T, int(child))


def fundamental_cycle(G: Graph, T: RootedTree, arc: int) -> List[Tuple[int, int]]:
    """Signed arcs of the cycle closed by non-tree ``arc``.

    The cycle is the arc itself (sign +1) followed by the tree path from its
    head back to its tail; a sign is +1 when the arc is traversed along its
    orientation.
    """
    arc = int(arc)
    if T.is_tree_arc[arc]:
        raise ValueError(f"arc {arc} is a tree arc; it closes no cycle")
    u, v = int(G.tail[arc]), int(G.head[arc])
    a = int(T.lca([u], [v])[0])
    cyc = [(arc, 1)]
    for w in T.path_to_ancestor(v, a):  # walking up: w -> parent[w]
        cyc.append((int(T.parent_arc[w]), int(T.up_sign[w])))
    for w in reversed(T.path_to_ancestor(u, a)):  # walking down: parent[w] -> w
        cyc.append((int(T.parent_arc[w]), -int(T.up_sign[w])))
    return cyc


def crossing_sums(G: Graph, T: RootedTree, arc_values) -> np.ndarray:
    """For every subtree, the sum of ``arc_values`` over arcs leaving it.

    An arc (u, v) crosses exactly the cuts of tree edges on its tree path, so
    adding its value at u and v and subtracting twice at lca(u, v) and then
    taking subtree sums counts it once in every cut it crosses.
    """
    c = np.asarray(arc_values, dtype=float)
    acc = np.bincount(G.tail, c, G.n) + np.bincount(G.head, c, G.n)
    acc -= 2.0 * np.bincount(T.lca(G.tail, G.head), c, G.n)
    return T.subtree_sums(acc)


@dataclass(frozen=True)
class CutTable:
    """Per-tree-edge cut data, indexed by child vertex (root entries unused).

    ``R[v]`` is the cut resistance ``(sum over boundary of 1/r)^-1``, ``bC[v]``
    the supply inside, ``P[v]`` the sampling probability and ``tau`` the
    normaliser of ``r(tree edge) / R``.
    """

    edges: np.ndarray
    R: np.ndarray
    bC: np.ndarray
    r_tree: np.ndarray
    P: np.ndarray
    tau: float
    cdf: np.ndarray

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` tree edges (child vertices) i.i.d. from ``P``."""
        u = rng.random(count)
        idx = np.searchsorted(self.cdf, u, side="right")
        return self.edges[np.minimum(idx, len(self.edges) - 1)]


def build_cut_table(G: Graph, T: RootedTree, b) -> CutTable:
    b = np.asarray(b, dtype=float)
    cond = crossing_sums(G, T, G.conductance)
    R = np.full(G.n, np.nan)
    r_tree = np.full(G.n, np.nan)
    e = T.edges
    R[e] = 1.0 / cond[e]
    r_tree[e] = G.r[T.parent_arc[e]]
    bC = T.subtree_sums(b)
    score = r_tree[e] / R[e]
    tau = float(np.sum(score))
    P = np.zeros(G.n)
    P[e] = score / tau if len(e) else score
    cdf = np.cumsum(P[e])
    if len(cdf):
        cdf /= cdf[-1]
    return CutTable(edges=e, R=R, bC=bC, r_tree=r_tree, P=P, tau=tau, cdf=cdf)
