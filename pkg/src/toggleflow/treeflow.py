"""The TreeFlow structure: subtree potential updates and cut-flow queries.

``addvalue(v, x)`` adds ``x`` to the potential of every vertex in the subtree
of ``v``; ``findflow(v)`` returns ``S(C) - f(C)`` for ``C`` that subtree, where
``S(C)`` is the supply inside and ``f(C)`` the Ohm's-law flow leaving it.

Two implementations share this interface.  :class:`NaiveTreeFlow` recomputes
``f(C)`` from the boundary arcs on every query (O(m)).  :class:`TableTreeFlow`
keeps every ``f(C)`` cached and updates the cache through the interaction
table ``H`` in O(n) per ``addvalue`` with O(1) queries; O(n^2) memory.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graph import Graph, apply_laplacian
from .tree import RootedTree

__all__ = [
    "NaiveTreeFlow",
    "TableTreeFlow",
    "interaction_table",
    "interaction_table_bruteforce",
    "all_cut_flows",
    "subtree_indicator",
]


def subtree_indicator(T: RootedTree, cuts=None) -> np.ndarray:
    """n x k 0/1 matrix whose column j is the indicator of subtree ``cuts[j]``."""
    cuts = np.arange(T.n) if cuts is None else np.asarray(cuts, dtype=np.int64)
    tin = T.tin
    return ((tin[cuts][None, :] <= tin[:, None]) & (tin[:, None] < T.tout[cuts][None, :])).astype(
        float
    )


def interaction_table(G: Graph, T: RootedTree, L=None) -> np.ndarray:
    """H[v, w]: increase of the flow out of subtree(w) per unit added to subtree(v).

    Every arc e = (a, c) contributes ``(1/r) * s_w(e) * s_v(e)`` where
    ``s(e) = 1_C(a) - 1_C(c)`` is its crossing sign, so ``H = X^T L X`` for ``X``
    the subtree indicator matrix.  Built as one sparse product ``L X``
    followed by subtree sums over the rows (O(m n + n^2) work).  The root
    row and column (the cut V) are zero.
    """
    L = G.laplacian() if L is None else L
    n = T.n
    X = subtree_indicator(T)
    LX = np.asarray(L @ X)  # row u: how the net outflow at u responds to each cut
    # H[v, :] = sum_{u in subtree(v)} LX[u, :], via prefix sums over preorder
    prefix = np.zeros((n + 1, n))
    np.cumsum(LX[T.preorder], axis=0, out=prefix[1:])
    return prefix[T.tout] - prefix[T.tin]


def interaction_table_bruteforce(G: Graph, T: RootedTree) -> np.ndarray:
    """Same table by literal per-arc summation of the definition (tests only)."""
    n = T.n
    H = np.zeros((n, n))
    for v in range(n):
        for w in range(n):
            total = 0.0
            for a, c, r in zip(G.tail.tolist(), G.head.tolist(), G.r.tolist()):
                a_in, c_in = T.in_subtree(a, w), T.in_subtree(c, w)
                if a_in == c_in:
                    continue
                inside, outside = (a, c) if a_in else (c, a)
                # flow inside -> outside grows by 1/r per unit of potential at inside
                total += (float(T.in_subtree(inside, v)) - float(T.in_subtree(outside, v))) / r
            H[v, w] = total
    return H


def all_cut_flows(G: Graph, T: RootedTree, x) -> np.ndarray:
    """f(C) for every subtree in one leaf-to-root pass.

    The flow out of a subtree is the sum of the net outflows (Lx)(u) of its
    vertices: arcs internal to the subtree cancel in pairs.
    """
    return T.subtree_sums(apply_laplacian(G, x))


class _TreeFlowBase:
    def __init__(self, G: Graph, T: RootedTree, b):
        self.G = G
        self.T = T
        self.b = np.asarray(b, dtype=float)
        self.S = T.subtree_sums(self.b)
        self.S[T.root] = 0.0
        self.value = np.zeros(G.n)

    def _add_to_subtree(self, v: int, x: float):
        self.value[self.T.subtree(v)] += x

    def findflow(self, v: int) -> float:
        if v == self.T.root:
            return 0.0
        return float(self.S[v] - self.cut_flow(v))

    def recompute_all_cut_flows(self) -> np.ndarray:
        return all_cut_flows(self.G, self.T, self.value)


class NaiveTreeFlow(_TreeFlowBase):
    """TreeFlow with O(m) queries and O(subtree) updates."""

    def addvalue(self, v: int, x: float) -> None:
        self._add_to_subtree(v, x)

    def cut_flow(self, v: int) -> float:
        G, T = self.G, self.T
        a = T.in_subtree(G.tail, v)
        c = T.in_subtree(G.head, v)
        cross = a != c
        sign = np.where(a[cross], 1.0, -1.0)
        dx = self.value[G.tail[cross]] - self.value[G.head[cross]]
        return float(np.dot(sign, dx / G.r[cross]))


class TableTreeFlow(_TreeFlowBase):
    """TreeFlow with the cut-interaction table: O(n) updates, O(1) queries."""

    def __init__(self, G: Graph, T: RootedTree, b, H=None):
        super().__init__(G, T, b)
        self.H = interaction_table(G, T) if H is None else H
        self.f = np.zeros(G.n)

    def addvalue(self, v: int, x: float) -> None:
        self._add_to_subtree(v, x)
        self.f += x * self.H[v]

    def cut_flow(self, v: int) -> float:
        return float(self.f[v])

    def recompute_all_cut_flows(self) -> np.ndarray:
        self.f = super().recompute_all_cut_flows()
        return self.f
