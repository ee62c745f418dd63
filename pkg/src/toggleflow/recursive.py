"""Batched cut toggling with contraction, sparsification and recursion.

Each outer iteration samples ``d`` tree edges, contracts the tree
components they leave behind into a small Laplacian system, sparsifies it,
solves it recursively to tolerance ``eps_prime`` and applies the result,
reverting whenever the dual objective fails to increase.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .batched import _nearest_marked_ancestor
from .graph import Graph, GraphError, apply_laplacian, check_supply, dual_objective
from .laplacian import _check_eps, _summary, tree_defined_flow
from .trace import SolveResult, SolverTrace
from .tree import RootedTree, build_cut_table, low_stretch_tree

__all__ = [
    "RecursionParams",
    "ContractedSystem",
    "contract_partition",
    "optimal_batch_delta",
    "batch_increase",
    "spectral_sparsify",
    "spectral_approx_check",
    "recursive_solve",
    "recursion_beta",
    "batch_size",
    "outer_budget",
    "graph_from_laplacian",
    "solve_dense_laplacian",
]


@dataclass(frozen=True)
class RecursionParams:
    """Parameters of the recursive solver.

    n0 : base-case size, solved by elimination.
    gamma : sparsifier quality.
    eps_prime : tolerance handed to every recursive call.
    delta : exponent of the batch-size schedule.
    c3 : multiplier of the batch-size schedule.
    d : fixed batch size overriding the schedule at the top level.
    sparsify : whether to sparsify contracted systems at all.
    inner : ``"recursive"`` or ``"exact"`` (solve contracted systems directly).
    max_outer : cap on outer iterations per node.
    min_sparsify : systems smaller than this are never sparsified (default 2 n0).
    """

    n0: int = 10
    gamma: float = 0.01
    eps_prime: float = 0.01
    delta: float = 0.5
    c3: float = 1.0
    d: Optional[int] = None
    sparsify: bool = True
    inner: str = "recursive"
    max_outer: Optional[int] = None
    min_sparsify: Optional[int] = None

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError("n0 must be at least 2")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.eps_prime < 1.0:
            raise ValueError("eps_prime must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.c3 <= 0:
            raise ValueError("c3 must be positive")
        if self.inner not in ("recursive", "exact"):
            raise ValueError("inner must be 'recursive' or 'exact'")

    @property
    def sparsify_threshold(self) -> int:
        return 2 * self.n0 if self.min_sparsify is None else self.min_sparsify

    @property
    def beta(self) -> float:
        return recursion_beta(self.n0, self.gamma, self.eps_prime)


def recursion_beta(n0: int, gamma: float, eps_prime: float) -> float:
    """Lower bound on the fraction of the exact batch progress kept per step."""
    g = gamma * gamma / (1.0 - gamma) ** 2
    alpha = 4.0 * eps_prime * (1.0 + gamma) / (1.0 - gamma) * (1.0 + g) + 2.0 * g
    return (1.0 - 1.0 / n0**2) * (1.0 - alpha)


def batch_size(m_here: int, m_top: int, n: int, params: RecursionParams) -> int:
    """max(1, ceil(c3 * m_here * m_top^-delta)), at most n - 1."""
    d = max(1, math.ceil(params.c3 * m_here * m_top ** (-params.delta)))
    return min(d, n - 1)


def outer_budget(tau: float, d: int, eps: float) -> int:
    return max(1, math.ceil(5.0 * tau / d * math.log(1.0 / eps)))


class ContractedSystem(NamedTuple):
    """Laplacian of the graph with each part shrunk to a vertex.

    ``labels[i]`` is the part of vertex ``i``; ``L`` is the dense Laplacian
    on the parts (parallel arcs merged by conductance); ``b`` holds
    ``b(V_k) - f(V_k)`` for ``f`` the Ohm's-law flow of the current potentials.
    """

    labels: np.ndarray
    L: np.ndarray
    b: np.ndarray

    @property
    def k(self) -> int:
        return len(self.b)


def _labels(parts, n):
    if isinstance(parts, np.ndarray) and parts.ndim == 1 and len(parts) == n and parts.dtype.kind in "iu":
        labels = parts.astype(np.int64)
        k = int(labels.max()) + 1 if n else 0
        if np.any(np.bincount(labels, minlength=k) == 0):
            raise ValueError("empty part")
        return labels, k
    labels = np.full(n, -1, dtype=np.int64)
    for k, part in enumerate(parts):
        part = np.asarray(part, dtype=np.int64)
        if len(part) == 0:
            raise ValueError(f"part {k} is empty")
        if np.any(labels[part] >= 0):
            raise ValueError("parts overlap")
        labels[part] = k
    if np.any(labels < 0):
        raise ValueError("parts do not cover every vertex")
    return labels, len(parts)


def _contracted_laplacian(G: Graph, labels, k) -> np.ndarray:
    a, c = labels[G.tail], labels[G.head]
    W = np.bincount(a * k + c, weights=G.conductance, minlength=k * k).reshape(k, k)
    W = W + W.T
    np.fill_diagonal(W, 0.0)
    return np.diag(W.sum(axis=1)) - W


def contract_partition(G: Graph, x, parts, b) -> ContractedSystem:
    """Contracted system for a partition given as a label vector or list of parts."""
    labels, k = _labels(parts, G.n)
    outflow = apply_laplacian(G, x)
    bH = np.bincount(labels, weights=np.asarray(b, dtype=float) - outflow, minlength=k)
    return ContractedSystem(labels, _contracted_laplacian(G, labels, k), bH)


def solve_dense_laplacian(L, b) -> np.ndarray:
    """Minimum-norm solution of a connected Laplacian system."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    k = len(b)
    x = np.zeros(k)
    if k > 1:
        x[1:] = scipy.linalg.solve(L[1:, 1:], b[1:], assume_a="pos", check_finite=False)
    return x - x.mean()


def optimal_batch_delta(sys: ContractedSystem) -> np.ndarray:
    """Minimum-norm solution of L_H Delta = b_H."""
    tol = 1e-9 * max(1.0, float(np.abs(sys.b).sum()))
    if abs(float(sys.b.sum())) > tol:
        raise ValueError("b_H is not in the range of L_H")
    return solve_dense_laplacian(sys.L, sys.b)


def batch_increase(sys: ContractedSystem, delta) -> float:
    """b_H . Delta - Delta L_H Delta / 2."""
    delta = np.asarray(delta, dtype=float)
    return float(sys.b @ delta - 0.5 * delta @ sys.L @ delta)


def spectral_sparsify(L, gamma: float, rng, min_size: int = 20) -> np.ndarray:
    """Effective-resistance sampling sparsifier of a dense Laplacian.

    Draws ``ceil(9 k ln k / gamma^2)`` edges with replacement, edge ``e`` with
    probability ``p_e = c_e R_eff(e) / (k - 1)``; an edge drawn ``s`` times
    gets conductance ``s c_e / (q p_e)`` for ``q`` the number of draws.
    Laplacians with fewer than ``min_size`` vertices are returned unchanged.
    """
    L = np.asarray(L, dtype=float)
    k = L.shape[0]
    if k < max(min_size, 2):
        return L.copy()
    iu, ju = np.triu_indices(k, 1)
    c = -L[iu, ju]
    keep = c > 0
    iu, ju, c = iu[keep], ju[keep], c[keep]
    Lp = np.linalg.pinv(L, hermitian=True)
    reff = Lp[iu, iu] + Lp[ju, ju] - 2.0 * Lp[iu, ju]
    p = np.maximum(c * reff, 0.0)
    p /= p.sum()
    q = math.ceil(9.0 * k * math.log(k) / gamma**2)
    counts = rng.multinomial(q, p)
    cw = counts * c / (q * p)
    W = np.zeros((k, k))
    W[iu, ju] = cw
    W = W + W.T
    return np.diag(W.sum(axis=1)) - W


def spectral_approx_check(A, B, gamma: float, rtol: float = 1e-10) -> bool:
    """True iff every generalised eigenvalue of (B, A) on range(A) is in [1-gamma, 1+gamma]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    lam, U = np.linalg.eigh(A)
    top = max(float(lam.max(initial=0.0)), 0.0)
    sel = lam > rtol * max(top, 1e-300)
    if not np.any(sel):
        return bool(np.allclose(B, 0.0))
    Q = U[:, sel] / np.sqrt(lam[sel])
    mu = np.linalg.eigvalsh(Q.T @ B @ Q)
    slack = 1e-9
    return bool(mu.min() >= 1.0 - gamma - slack and mu.max() <= 1.0 + gamma + slack)


def graph_from_laplacian(L, ctol: float = 0.0) -> Graph:
    """Graph whose arcs are the off-diagonal entries of ``L`` (raises if disconnected)."""
    L = np.asarray(L, dtype=float)
    iu, ju = np.triu_indices(L.shape[0], 1)
    c = -L[iu, ju]
    keep = c > ctol
    return Graph(L.shape[0], iu[keep], ju[keep], 1.0 / c[keep])


Sparsifier = Callable[[np.ndarray, float, np.random.Generator], np.ndarray]


class _Node:
    def __init__(self, params, sparsifier, m_top):
        self.params = params
        self.sparsifier = sparsifier
        self.m_top = m_top

    def _sparsify(self, L, rng):
        p = self.params
        if self.sparsifier is not None:
            return self.sparsifier(L, p.gamma, rng)
        if not p.sparsify:
            return L
        return spectral_sparsify(L, p.gamma, rng, min_size=p.sparsify_threshold)

    def _inner(self, Ls, bH, seq):
        """Approximate solve of the (sparsified) contracted system, or None."""
        p = self.params
        k = len(bH)
        if p.inner == "exact" or k <= p.n0:
            try:
                return solve_dense_laplacian(Ls, bH)
            except (np.linalg.LinAlgError, ValueError):
                return None
        try:
            H = graph_from_laplacian(Ls)
        except GraphError:
            return None
        x, _ = self.solve(H, bH - bH.mean(), p.eps_prime, seq, None)
        return x

    def solve(self, G: Graph, b, eps, seq: np.random.SeedSequence, trace, tree=None, d=None):
        p = self.params
        if G.n <= p.n0:
            return solve_dense_laplacian(G.laplacian(dense=True), b), None
        rng = np.random.default_rng(seq)
        T = low_stretch_tree(G) if tree is None else tree
        table = build_cut_table(G, T, b)
        d = batch_size(G.m, self.m_top, G.n, p) if d is None else min(int(d), G.n - 1)
        K = outer_budget(table.tau, d, eps)
        if p.max_outer is not None:
            K = min(K, p.max_outer)
        if trace is not None:
            trace.config.update({"tau": table.tau, "K": K, "d": d, "beta": p.beta})
        x = np.zeros(G.n)
        dual = 0.0
        Lg = G.laplacian()
        marked = np.zeros(G.n, dtype=bool)
        for t in range(K):
            if d >= G.n - 1:
                cuts = T.edges
            else:
                cuts = table.sample(rng, d)
            marked[:] = False
            marked[cuts] = True
            marked[T.root] = True
            leader = _nearest_marked_ancestor(T, marked)
            heads = np.flatnonzero(marked)
            index = np.empty(G.n, dtype=np.int64)
            index[heads] = np.arange(len(heads))
            labels = index[leader]
            k = len(heads)
            resid = b - Lg @ x
            bH = np.bincount(labels, weights=resid, minlength=k)
            LH = _contracted_laplacian(G, labels, k)
            child = np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (t,))
            if k == G.n:
                # contraction did not shrink the graph; solving it again would not terminate
                step = solve_dense_laplacian(LH, bH)
            else:
                Ls = self._sparsify(LH, np.random.default_rng(child))
                step = self._inner(Ls, bH, child)
            reverted = True
            if step is not None:
                xn = x + step[labels]
                dn = dual_objective(G, xn, b)
                if dn > dual:
                    x, dual, reverted = xn, dn, False
            if trace is not None:
                trace.add(
                    t + 1,
                    T.parent_arc[np.unique(cuts)],
                    0.0 if step is None else float(np.abs(step).max(initial=0.0)),
                    dual,
                    reverted=reverted,
                    parts=k,
                )
        return x, T


def recursive_solve(
    G: Graph,
    b,
    eps: float,
    params: RecursionParams | None = None,
    rng=None,
    *,
    tree: RootedTree | None = None,
    sparsifier: Sparsifier | None = None,
) -> SolveResult:
    """Solve Lx = b by recursive batched cut toggling.

    Parameters
    ----------
    G, b : graph and zero-sum supply.
    eps : float
        Outer tolerance; only sets the outer iteration count.
    params : RecursionParams
    rng : int seed, SeedSequence or Generator
        Each recursive call gets its own stream derived from the caller's
        seed and the call index.
    tree : RootedTree, optional
        Spanning tree for the top level.
    sparsifier : callable, optional
        ``(L, gamma, rng) -> L_tilde`` replacing :func:`spectral_sparsify`
        at every level, e.g. to inject failures.

    Returns
    -------
    SolveResult
        Potentials, their tree-defined flow and the top-level trace; each
        record holds the dual objective after the step and whether it was
        reverted.
    """
    start = time.perf_counter()
    eps = _check_eps(eps)
    b = check_supply(G, b)
    params = RecursionParams() if params is None else params
    if isinstance(rng, np.random.SeedSequence):
        seq = rng
    elif isinstance(rng, np.random.Generator):
        seq = np.random.SeedSequence(int(rng.integers(2**63)))
    else:
        seq = np.random.SeedSequence(0 if rng is None else int(rng))
    trace = SolverTrace(config={"algo": "recursive", "eps": eps, **_params_echo(params)})
    node = _Node(params, sparsifier, G.m)
    x, T = node.solve(G, b, eps, seq, trace, tree=tree, d=params.d)
    if T is None:
        T = low_stretch_tree(G) if tree is None else tree
        trace.config.update({"tau": build_cut_table(G, T, b).tau, "K": 0})
    f = tree_defined_flow(G, T, x, b)
    trace.summary.update(_summary(G, f, x, b, len(trace), start))
    trace.summary["reverts"] = int(sum(rec.get("reverted", False) for rec in trace.records))
    return SolveResult(x, f, trace)


def _params_echo(params: RecursionParams) -> dict:
    return {
        "n0": params.n0,
        "gamma": params.gamma,
        "eps_prime": params.eps_prime,
        "delta": params.delta,
        "c3": params.c3,
    }
