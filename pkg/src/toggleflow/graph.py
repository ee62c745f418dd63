"""Graphs, supplies, objectives and the flow/potential primitives.

Vertices are ``0 .. n-1``.  Every arc has a fixed orientation ``tail -> head``
chosen at construction; a flow is an array over arcs, signed with respect to
that orientation, and potentials are an array over vertices.

For ``p = 2`` the primal objective is the electrical energy and the dual is
``b.x - x.Lx / 2``; for general ``p`` see :func:`primal_energy` and
:func:`dual_objective`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Graph",
    "GraphError",
    "DisconnectedGraphError",
    "InfeasibleFlowError",
    "PNormParams",
    "check_supply",
    "primal_energy",
    "dual_objective",
    "apply_laplacian",
    "flow_divergence",
    "potential_defined_flow",
    "duality_gap",
    "gap_quadratic_form",
    "feasibility_residual",
    "read_graph",
    "write_graph",
    "read_supply",
    "write_supply",
]

SUPPLY_RTOL = 1e-12
FEASIBILITY_TOL = 1e-8


class GraphError(ValueError):
    """Invalid graph or supply data."""


class DisconnectedGraphError(GraphError):
    pass


class InfeasibleFlowError(ValueError):
    """A flow that was required to be a b-flow is not one."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected multigraph with a fixed arc orientation and resistances.

    Parameters
    ----------
    n : int
        Number of vertices.
    tail, head : array_like of int
        Arc endpoints.  Parallel arcs are allowed, self-loops are not.
    r : array_like of float
        Positive, finite resistance per arc.
    """

    n: int
    tail: np.ndarray
    head: np.ndarray
    r: np.ndarray
    # per-vertex incidence index (CSR layout): arcs incident to v are
    # adj_arc[adj_ptr[v]:adj_ptr[v+1]], with the other endpoint in adj_other
    adj_ptr: np.ndarray = field(init=False, repr=False)
    adj_arc: np.ndarray = field(init=False, repr=False)
    adj_other: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        tail = np.array(self.tail, dtype=np.int64).reshape(-1)
        head = np.array(self.head, dtype=np.int64).reshape(-1)
        r = np.array(self.r, dtype=float).reshape(-1)
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        if not (len(tail) == len(head) == len(r)):
            raise GraphError("tail, head and r must have equal length")
        if len(tail) and (min(tail.min(), head.min()) < 0 or max(tail.max(), head.max()) >= n):
            raise GraphError("arc endpoint out of range")
        loops = np.flatnonzero(tail == head)
        if len(loops):
            raise GraphError(f"self-loop at arc {int(loops[0])} (vertex {int(tail[loops[0]])})")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise GraphError("resistances must be positive and finite")
        for name, arr in (("tail", tail), ("head", head), ("r", r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)
        self._check_connected()

        ends = np.concatenate([tail, head])
        arcs = np.concatenate([np.arange(len(tail)), np.arange(len(tail))])
        others = np.concatenate([head, tail])
        order = np.argsort(ends, kind="stable")
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=n), out=ptr[1:])
        for name, arr in (("adj_ptr", ptr), ("adj_arc", arcs[order]), ("adj_other", others[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _check_connected(self):
        if self.n == 1:
            return
        adj = sp.coo_matrix(
            (np.ones(len(self.tail)), (self.tail, self.head)), shape=(self.n, self.n)
        )
        k, labels = connected_components(adj, directed=False)
        if k > 1:
            other = int(np.flatnonzero(labels != labels[0])[0])
            raise DisconnectedGraphError(
                f"graph is disconnected ({k} components): vertex 0 lies in a component of "
                f"{int(np.sum(labels == labels[0]))} vertices and vertex {other} in a "
                f"different component of {int(np.sum(labels == labels[other]))} vertices"
            )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "Graph":
        """Build from ``(tail, head)`` or ``(tail, head, r)`` tuples (r defaults to 1)."""
        tails, heads, rs = [], [], []
        for e in edges:
            tails.append(int(e[0]))
            heads.append(int(e[1]))
            rs.append(float(e[2]) if len(e) > 2 else 1.0)
        return cls(n, np.array(tails, dtype=np.int64), np.array(heads, dtype=np.int64), np.array(rs))

    @property
    def m(self) -> int:
        return len(self.tail)

    @property
    def conductance(self) -> np.ndarray:
        return 1.0 / self.r

    @property
    def r_ratio(self) -> float:
        """max r / min r (1 for an arcless graph)."""
        if self.m == 0:
            return 1.0
        return float(self.r.max() / self.r.min())

    def edges(self):
        return list(zip(self.tail.tolist(), self.head.tolist(), self.r.tolist()))

    def incidence(self) -> sp.csr_matrix:
        """Vertex-arc incidence matrix A with A[tail, e] = 1, A[head, e] = -1."""
        m = self.m
        rows = np.concatenate([self.tail, self.head])
        cols = np.concatenate([np.arange(m), np.arange(m)])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, m))

    def laplacian(self, dense: bool = False):
        """Weighted Laplacian sum_e (1/r_e)(e_i - e_j)(e_i - e_j)^T."""
        A = self.incidence()
        L = (A @ sp.diags(self.conductance) @ A.T).tocsr()
        return L.toarray() if dense else L

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, R={self.r_ratio:.3g})"


@dataclass(frozen=True)
class PNormParams:
    """Exponent data for the p-norm problem: ``q = p/(p-1)``, ``w = r^(-1/(p-1))``."""

    p: float
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 1:
            raise ValueError(f"p must be a finite real > 1, got {self.p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1.0))

    def weights(self, G: Graph) -> np.ndarray:
        return G.r ** (-1.0 / (self.p - 1.0))


def _params(p) -> PNormParams:
    return p if isinstance(p, PNormParams) else PNormParams(p)


def _finite(name, arr):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_supply(G: Graph, b) -> np.ndarray:
    """Validate a supply vector (length n, finite, zero-sum to 1e-12 relative)."""
    b = _finite("supply", b).reshape(-1)
    if len(b) != G.n:
        raise GraphError(f"supply has length {len(b)}, graph has {G.n} vertices")
    total = float(np.sum(b))
    if abs(total) > SUPPLY_RTOL * float(np.abs(b).sum()):
        raise GraphError(f"supply does not sum to zero (sum = {total:.3e})")
    return b


def primal_energy(G: Graph, f, p=2.0) -> float:
    """(1/p) sum_e r_e |f_e|^p."""
    p = _params(p).p
    f = _finite("flow", f)
    if p == 2.0:
        return 0.5 * float(np.dot(G.r, f * f))
    return float(np.dot(G.r, np.abs(f) ** p)) / p


def dual_objective(G: Graph, x, b, p=2.0) -> float:
    """b.x - (1/q) sum_e w_e |x(tail) - x(head)|^q."""
    prm = _params(p)
    x = _finite("potentials", x)
    dx = x[G.tail] - x[G.head]
    if prm.p == 2.0:
        return float(np.dot(b, x)) - 0.5 * float(np.dot(G.conductance, dx * dx))
    w = prm.weights(G)
    return float(np.dot(b, x)) - float(np.dot(w, np.abs(dx) ** prm.q)) / prm.q


def apply_laplacian(G: Graph, x) -> np.ndarray:
    """Lx without forming L: (Lx)(i) = sum_{j~i} (x(i) - x(j)) / r(i,j)."""
    x = np.asarray(x, dtype=float)
    cur = (x[G.tail] - x[G.head]) / G.r
    return np.bincount(G.tail, cur, G.n) - np.bincount(G.head, cur, G.n)


def flow_divergence(G: Graph, f) -> np.ndarray:
    """Af: outgoing minus incoming flow at every vertex."""
    f = np.asarray(f, dtype=float)
    return np.bincount(G.tail, f, G.n) - np.bincount(G.head, f, G.n)


def feasibility_residual(G: Graph, f, b) -> float:
    """||Af - b||_inf."""
    return float(np.max(np.abs(flow_divergence(G, f) - b), initial=0.0))


def potential_defined_flow(G: Graph, x, p=2.0) -> np.ndarray:
    """Flow w (dx)|dx|^(q-2) on every arc; Ohm's law when p = 2."""
    prm = _params(p)
    x = np.asarray(x, dtype=float)
    dx = x[G.tail] - x[G.head]
    if prm.p == 2.0:
        return dx / G.r
    return prm.weights(G) * np.sign(dx) * np.abs(dx) ** (prm.q - 1.0)


def _require_feasible(G, f, b):
    tol = FEASIBILITY_TOL * max(1.0, float(np.max(np.abs(b), initial=0.0)))
    res = feasibility_residual(G, f, b)
    if res > tol:
        raise InfeasibleFlowError(f"flow is not a b-flow: ||Af - b||_inf = {res:.3e} > {tol:.1e}")


def duality_gap(G: Graph, f, x, b) -> float:
    """E(f) - B(x) for a feasible b-flow f (p = 2)."""
    b = np.asarray(b, dtype=float)
    _require_feasible(G, f, b)
    return primal_energy(G, f) - dual_objective(G, x, b)


def gap_quadratic_form(G: Graph, f, x) -> float:
    """(1/2) sum_e r_e (f_e - dx_e / r_e)^2; equals the duality gap for b-flows."""
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    d = f - (x[G.tail] - x[G.head]) / G.r
    return 0.5 * float(np.dot(G.r, d * d))


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def read_graph(path) -> Graph:
    """Read ``n m`` followed by m lines ``tail head resistance``."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise GraphError(f"{path}: empty graph file")
    try:
        n, m = (int(t) for t in lines[0].split())
    except ValueError:
        raise GraphError(f"{path}: header must be 'n m'") from None
    if len(lines) - 1 != m:
        raise GraphError(f"{path}: header says {m} arcs, found {len(lines) - 1}")
    tail = np.empty(m, dtype=np.int64)
    head = np.empty(m, dtype=np.int64)
    r = np.empty(m)
    for k, ln in enumerate(lines[1:]):
        parts = ln.split()
        if len(parts) != 3:
            raise GraphError(f"{path}:{k + 2}: expected 'tail head resistance'")
        tail[k], head[k], r[k] = int(parts[0]), int(parts[1]), float(parts[2])
    return Graph(n, tail, head, r)


def write_graph(path, G: Graph) -> None:
    rows = [f"{G.n} {G.m}"]
    rows += [f"{u} {v} {float(r)!r}" for u, v, r in zip(G.tail.tolist(), G.head.tolist(), G.r)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_supply(path, n: int | None = None) -> np.ndarray:
    """Read lines ``vertex value``; vertices not listed get supply 0."""
    entries = []
    for k, ln in enumerate(Path(path).read_text().splitlines()):
        if not ln.strip():
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{k + 1}: expected 'vertex value'")
        entries.append((int(parts[0]), float(parts[1])))
    size = n if n is not None else (max(v for v, _ in entries) + 1 if entries else 0)
    b = np.zeros(size)
    for v, val in entries:
        if not 0 <= v < size:
            raise GraphError(f"{path}: vertex {v} out of range")
        b[v] = val
    return b


def write_supply(path, b) -> None:
    Path(path).write_text("".join(f"{i} {float(v)!r}\n" for i, v in enumerate(b)))
