"""Cycle toggling (p >= 2) and cut toggling (1 < p <= 2) for p-norm flows.

Both solvers rebuild their spanning tree from the current iterate, sample
one fundamental cycle or cut, and move along it by the exact minimiser of
the one-dimensional restriction of the objective.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .graph import (
    Graph,
    PNormParams,
    check_supply,
    dual_objective,
    feasibility_residual,
    potential_defined_flow,
    primal_energy,
)
from .laplacian import _check_eps, complete_on_tree
from .trace import SolveResult, SolverTrace, as_rng
from .tree import RootedTree, crossing_sums, fundamental_cycle, low_stretch_tree

__all__ = [
    "cycle_delta_root",
    "cut_delta_root",
    "pnorm_cycle_solve",
    "pnorm_cut_solve",
    "dual_to_flow",
    "kkt_residual",
    "ConversionParams",
    "cycle_sampling_weights_p",
    "cut_sampling_weights_q",
    "monotone_root",
    "potentials_from_flow",
]

CLAMP = 1e-12
STALL_RTOL = 1e-12


def _phi(y, s):
    return y * np.abs(y) ** (s - 2.0)


def monotone_root(c, y, s: float, target: float = 0.0) -> float:
    """Unique root of g(D) = sum c (y + D)|y + D|^(s-2) - target, s >= 2, c > 0.

    Bisection on a bracket grown until the sign changes, then Newton
    polish kept inside the bracket.  The residual is driven to
    ``1e-12 * (sum c (|y| + |D|)^(s-1) + |target|)`` or to the floating
    point floor of the bracket.
    """
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    if s < 2.0:
        raise ValueError(f"exponent must be >= 2, got {s}")
    if s == 2.0:
        return float((target - np.dot(c, y)) / c.sum())

    def g(d):
        return float(np.dot(c, _phi(y + d, s))) - target

    def tol(d):
        return 1e-12 * (float(np.dot(c, (np.abs(y) + abs(d)) ** (s - 1.0))) + abs(target))

    span = float(np.max(np.abs(y), initial=0.0)) + 1.0
    lo, hi = -span, span
    while g(lo) > 0.0:
        lo *= 2.0
    while g(hi) < 0.0:
        hi *= 2.0
    d = 0.5 * (lo + hi)
    for _ in range(200):
        d = 0.5 * (lo + hi)
        val = g(d)
        if abs(val) <= tol(d) or hi - lo <= 1e-13 * max(1.0, abs(d)):
            break
        if val > 0.0:
            hi = d
        else:
            lo = d
        if hi - lo <= 1e-6 * span:
            break
    for _ in range(50):
        val = g(d)
        if abs(val) <= tol(d):
            break
        if val > 0.0:
            hi = d
        else:
            lo = d
        slope = (s - 1.0) * float(np.dot(c, np.abs(y + d) ** (s - 2.0)))
        nd = d - val / slope if slope > 0.0 else 0.5 * (lo + hi)
        if not lo < nd < hi:
            nd = 0.5 * (lo + hi)
        if nd == d:
            break
        d = nd
    return float(d)


def cycle_delta_root(r, f, p: float) -> float:
    """Flow D to add around a cycle: sum r (f + D)|f + D|^(p-2) = 0.

    ``f`` holds the cycle's flows oriented along the traversal.
    """
    if p < 2.0:
        raise ValueError("cycle toggling requires p >= 2")
    return monotone_root(r, f, p, 0.0)


def cut_delta_root(w, dx, b_C: float, q: float) -> float:
    """Potential D to add to a cut: sum w (dx + D)|dx + D|^(q-2) = b_C.

    ``dx`` holds potential drops across the boundary, inside minus outside.
    """
    if q < 2.0:
        raise ValueError("cut toggling requires q >= 2 (p <= 2)")
    return monotone_root(w, dx, q, b_C)


def kkt_residual(G: Graph, f, x, p, b) -> float:
    """max_e |r f|f|^(p-2) - (x(i) - x(j))| + ||Af - b||_inf; zero iff jointly optimal."""
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    dx = x[G.tail] - x[G.head]
    ohm = np.abs(G.r * np.sign(f) * np.abs(f) ** (p - 1.0) - dx)
    return float(np.max(ohm, initial=0.0)) + feasibility_residual(G, f, b)


def dual_to_flow(G: Graph, T: RootedTree, x, b, p: float) -> np.ndarray:
    """KKT flow of ``x`` off the tree, completed on ``T`` to an exact b-flow."""
    f = potential_defined_flow(G, x, p)
    return complete_on_tree(G, T, f, b)


@dataclass(frozen=True)
class ConversionParams:
    """Dual accuracy ``eps_prime`` that makes the tree-defined flow (1 + eps)-optimal."""

    eps: float
    n: int
    m: int
    R: float
    p: float

    @classmethod
    def for_graph(cls, G: Graph, p: float, eps: float) -> "ConversionParams":
        return cls(eps=float(eps), n=G.n, m=G.m, R=G.r_ratio, p=float(p))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def eps_prime(self) -> float:
        p, q, n, m, R = self.p, self.q, self.n, self.m, self.R
        denom = 2.0 * n**4 * (m * R) ** (1.0 / p) * (q * 2.0**q) ** (1.0 + 1.0 / q) * (n * R) ** (1.0 / p)
        return (min(self.eps / 3.0, 1.0) / denom) ** q


def _clamped(values):
    top = float(values.max(initial=0.0))
    floor = CLAMP * top if top > 0.0 else 1.0
    return np.maximum(values, floor)


def cycle_sampling_weights_p(G: Graph, T: RootedTree, h, p: float):
    """(non-tree arcs, unnormalised weights) for the p-norm cycle distribution.

    ``h = r |f|^(p-2)`` (clamped) are the tree lengths; each cycle sum
    includes the non-tree arc itself.
    """
    nontree = np.flatnonzero(~T.is_tree_arc)
    if len(nontree) == 0:
        return nontree, np.zeros(0)
    u, v = G.tail[nontree], G.head[nontree]
    c = p * 2.0 ** (2.0 * p - 1.0)
    hs = T.path_weight(G, h, u, v) + h[nontree]
    rs = T.path_weight(G, G.r, u, v) + G.r[nontree]
    first = c * hs / h[nontree]
    second = (c * rs / G.r[nontree]) ** (1.0 / (p - 1.0))
    return nontree, np.maximum(first, second)


def cut_sampling_weights_q(G: Graph, T: RootedTree, g, w, q: float):
    """(tree children, unnormalised weights) for the p-norm cut distribution.

    ``g = w |dx|^(q-2)`` (clamped) are the reciprocal tree lengths; the sums
    run over the boundary arcs of each fundamental cut.
    """
    e = T.edges
    pa = T.parent_arc[e]
    c = q * 2.0 ** (2.0 * q - 1.0)
    gs = crossing_sums(G, T, g)[e]
    ws = crossing_sums(G, T, w)[e]
    first = c * gs / g[pa]
    second = (c * ws / w[pa]) ** (1.0 / (q - 1.0))
    return e, np.maximum(first, second)


def potentials_from_flow(G: Graph, T: RootedTree, f, p) -> np.ndarray:
    """Invert r f|f|^(p-2) = x(i) - x(j) along the tree, with x(root) = 0."""
    f = np.asarray(f, dtype=float)
    drop = G.r * np.sign(f) * np.abs(f) ** (p - 1.0)
    arc_w = np.zeros(G.m)
    e = T.edges
    arc_w[T.parent_arc[e]] = T.up_sign[e] * drop[T.parent_arc[e]]
    return T.root_distance(arc_w)


def _cycle_arrays(G, T, arc):
    cyc = fundamental_cycle(G, T, arc)
    return (
        np.fromiter((a for a, _ in cyc), dtype=np.int64, count=len(cyc)),
        np.fromiter((s for _, s in cyc), dtype=float, count=len(cyc)),
    )


class _Stall:
    """Stops once the objective moves by less than 1e-12 relative over a window."""

    def __init__(self, window: int):
        self.window = max(1, int(window))
        self.mark = None

    def __call__(self, t: int, obj: float) -> bool:
        if t % self.window:
            return False
        prev, self.mark = self.mark, obj
        return prev is not None and abs(obj - prev) <= STALL_RTOL * max(abs(obj), 1e-300)


def _pick(rng, weights):
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)


def pnorm_cycle_solve(
    G: Graph,
    b,
    p: float,
    eps: float,
    rng=None,
    *,
    max_iters: int = 1_000_000,
    tree_refresh: int = 1,
    tree: RootedTree | None = None,
    tree_swaps: int = 0,
    iterations: int | None = None,
    stall: bool = True,
) -> SolveResult:
    """Minimum p-norm flow for p >= 2 by randomised cycle toggling.

    Parameters
    ----------
    p : float
        Exponent, at least 2.
    eps : float
        Target relative accuracy; enters the iteration budget together with
        the measured sampling normaliser, ``p ln n + ln R`` and ``ln(1/eps)``.
    max_iters : int
        Hard cap on iterations.
    tree_refresh : int
        Rebuild the tree every ``tree_refresh`` iterations.
    tree : RootedTree, optional
        Keep this tree for the whole run instead of rebuilding.
    tree_swaps : int
        Exchange budget of the tree heuristic at each rebuild.
    iterations : int, optional
        Override the budget.
    stall : bool
        Stop when the energy changes by < 1e-12 relative over 10 m iterations.

    Returns
    -------
    SolveResult
        ``x`` holds tree potentials of the final flow, ``f`` the flow.
    """
    start = time.perf_counter()
    params = PNormParams(p)
    p = params.p
    if p < 2.0:
        raise ValueError(f"cycle toggling requires p >= 2, got {p}; use pnorm_cut_solve")
    eps = _check_eps(eps)
    b = check_supply(G, b)
    rng = as_rng(rng)
    r = G.r
    T = tree if tree is not None else low_stretch_tree(G, max_swaps=0)
    f = complete_on_tree(G, T, np.zeros(G.m), b)
    energy = primal_energy(G, f, p)
    trace = SolverTrace(config={"algo": "pnorm-cycle", "p": p, "eps": eps})
    stop = _Stall(10 * G.m)
    K = 0 if G.m == G.n - 1 else None
    stopped = "budget"
    cache = {}
    t = 0
    while K is None or t < K:
        if t >= max_iters:
            stopped = "cap"
            break
        if tree is None and t % tree_refresh == 0 and t > 0:
            h = _clamped(r * np.abs(f) ** (p - 2.0))
            T = low_stretch_tree(G, h, max_swaps=tree_swaps)
            cache.clear()
        h = _clamped(r * np.abs(f) ** (p - 2.0))
        nontree, weights = cycle_sampling_weights_p(G, T, h, p)
        if K is None:
            tau = float(weights.sum())
            K = _cycle_budget(tau, eps, G, p) if iterations is None else int(iterations)
            trace.config.update({"tau": tau, "K": K})
            if K == 0:
                break
        a = int(nontree[_pick(rng, weights)])
        arcs, signs = cache.get(a) or cache.setdefault(a, _cycle_arrays(G, T, a))
        delta = cycle_delta_root(r[arcs], signs * f[arcs], p)
        np.add.at(f, arcs, signs * delta)
        t += 1
        energy = primal_energy(G, f, p)
        trace.add(t, a, delta, energy)
        if stall and stop(t, energy):
            stopped = "stall"
            break
    x = potentials_from_flow(G, T, f, p)
    trace.config.setdefault("tau", 0.0)
    trace.config.setdefault("K", 0)
    trace.summary.update(_report(G, f, x, b, p, t, stopped, start))
    return SolveResult(x, f, trace)


def pnorm_cut_solve(
    G: Graph,
    b,
    p: float,
    eps: float,
    rng=None,
    *,
    max_iters: int = 1_000_000,
    tree_refresh: int = 1,
    tree: RootedTree | None = None,
    tree_swaps: int = 0,
    iterations: int | None = None,
    dual_eps: float | None = None,
    stall: bool = True,
) -> SolveResult:
    """Dual of the minimum p-norm flow for 1 < p <= 2 by randomised cut toggling.

    Parameters
    ----------
    p : float
        Exponent in (1, 2].
    eps : float
        Target relative accuracy of the returned flow.
    dual_eps : float, optional
        Dual accuracy aimed for; defaults to the conversion tolerance of
        :class:`ConversionParams`, which sets the budget ``tau ln(1/dual_eps)``.
    max_iters, tree_refresh, tree, tree_swaps, iterations, stall
        As for :func:`pnorm_cycle_solve`, with the stall test on the dual.

    Returns
    -------
    SolveResult
        Potentials, the flow from :func:`dual_to_flow` on the last tree,
        and the trace.
    """
    start = time.perf_counter()
    params = PNormParams(p)
    p, q = params.p, params.q
    if p > 2.0:
        raise ValueError(f"cut toggling requires p <= 2, got {p}; use pnorm_cycle_solve")
    eps = _check_eps(eps)
    b = check_supply(G, b)
    rng = as_rng(rng)
    w = params.weights(G)
    conv = ConversionParams.for_graph(G, p, eps)
    dual_eps = conv.eps_prime if dual_eps is None else float(dual_eps)
    x = np.zeros(G.n)

    def lengths():
        return _clamped(w * np.abs(x[G.tail] - x[G.head]) ** (q - 2.0))

    T = tree if tree is not None else low_stretch_tree(G, 1.0 / lengths(), max_swaps=tree_swaps)
    bC = T.subtree_sums(b)
    trace = SolverTrace(config={"algo": "pnorm-cut", "p": p, "eps": eps, "dual_eps": dual_eps})
    stop = _Stall(10 * G.m)
    K = None
    stopped = "budget"
    t = 0
    dual = 0.0
    while K is None or t < K:
        if t >= max_iters:
            stopped = "cap"
            break
        g = lengths()
        if tree is None and t % tree_refresh == 0 and t > 0:
            T = low_stretch_tree(G, 1.0 / g, max_swaps=tree_swaps)
            bC = T.subtree_sums(b)
        children, weights = cut_sampling_weights_q(G, T, g, w, q)
        if K is None:
            tau = float(weights.sum())
            K = 0 if not len(children) else max(0, math.ceil(tau * math.log(1.0 / dual_eps)))
            K = K if iterations is None else int(iterations)
            trace.config.update({"tau": tau, "K": K})
            if K == 0:
                break
        v = int(children[_pick(rng, weights)])
        inside_t = T.in_subtree(G.tail, v)
        inside_h = T.in_subtree(G.head, v)
        arcs = np.flatnonzero(inside_t != inside_h)
        signs = np.where(inside_t[arcs], 1.0, -1.0)
        dxo = signs * (x[G.tail[arcs]] - x[G.head[arcs]])
        delta = cut_delta_root(w[arcs], dxo, float(bC[v]), q)
        x[T.subtree(v)] += delta
        t += 1
        dual = dual_objective(G, x, b, p)
        trace.add(t, int(T.parent_arc[v]), delta, dual)
        if stall and stop(t, dual):
            stopped = "stall"
            break
    trace.config.setdefault("tau", 0.0)
    trace.config.setdefault("K", 0)
    f = dual_to_flow(G, T, x, b, p)
    trace.summary.update(_report(G, f, x, b, p, t, stopped, start))
    return SolveResult(x, f, trace)


def _cycle_budget(tau, eps, G, p):
    return max(0, math.ceil(tau * math.log(1.0 / eps) * (p * math.log(G.n) + math.log(G.r_ratio))))


def _report(G, f, x, b, p, t, stopped, start):
    energy = primal_energy(G, f, p) if f is not None else float("nan")
    dual = dual_objective(G, x, b, p)
    return {
        "iterations_run": int(t),
        "stopped": stopped,
        "final_energy": energy,
        "final_dual": dual,
        "gap": energy - dual,
        "wall_ms": 1000.0 * (time.perf_counter() - start),
    }
