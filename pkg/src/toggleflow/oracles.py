"""Ground-truth solvers for tests and cross-checks.

:func:`solve_laplacian_dense` pins one vertex and factors the reduced
Laplacian.  :func:`pnorm_oracle` minimises the p-norm energy over the
cycle space of a spanning tree by damped Newton, polished in the dual for
p < 2.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .graph import Graph, PNormParams, dual_objective, potential_defined_flow, primal_energy
from .pnorm import kkt_residual, potentials_from_flow
from .tree import RootedTree, fundamental_cycle, minimum_spanning_tree_arcs

__all__ = [
    "solve_laplacian_dense",
    "electrical_flow",
    "pnorm_oracle",
    "potentials_from_flow",
    "kkt_residual",
    "OracleResult",
    "OracleError",
]

DENSE_LIMIT = 2000


class OracleError(RuntimeError):
    pass


def solve_laplacian_dense(G: Graph, b) -> np.ndarray:
    """Minimum-norm solution of Lx = b (mean-zero potentials)."""
    if G.n > DENSE_LIMIT:
        raise OracleError(f"dense oracle limited to n <= {DENSE_LIMIT}, got n = {G.n}")
    b = np.asarray(b, dtype=float)
    x = np.zeros(G.n)
    if G.n > 1:
        L = G.laplacian(dense=True)
        x[1:] = scipy.linalg.solve(L[1:, 1:], b[1:], assume_a="pos")
    return x - x.mean()


def electrical_flow(G: Graph, b):
    """(f*, x*) for p = 2 from the dense solve."""
    x = solve_laplacian_dense(G, b)
    return (x[G.tail] - x[G.head]) / G.r, x


class OracleResult(NamedTuple):
    f: np.ndarray
    x: np.ndarray
    newton_steps: int
    kkt: float


def _cycle_matrix(G: Graph, T: RootedTree) -> np.ndarray:
    nontree = np.flatnonzero(~T.is_tree_arc)
    B = np.zeros((G.m, len(nontree)))
    for k, a in enumerate(nontree):
        for e, s in fundamental_cycle(G, T, int(a)):
            B[e, k] += s
    return B


def _tree_flow(G: Graph, T: RootedTree, b) -> np.ndarray:
    f = np.zeros(G.m)
    s = T.subtree_sums(b)
    e = T.edges
    f[T.parent_arc[e]] = T.up_sign[e] * s[e]
    return f


def pnorm_oracle(G: Graph, b, p: float, tol: float = 1e-10, max_steps: int = 100_000) -> OracleResult:
    """Optimal p-norm flow and potentials by Newton's method on the cycle space.

    Flows are written ``f = f_T + B y`` with ``f_T`` the tree b-flow and the
    columns of ``B`` the fundamental cycles.  For p != 2 the energy is
    smoothed to ``(f^2 + mu^2)^(p/2)``, with ``mu`` annealed from 1e-2 to
    1e-10, which keeps the Hessian bounded and nonsingular near ``f = 0``.
    """
    p = PNormParams(p).p
    if G.n > 50:
        raise OracleError(f"p-norm oracle limited to n <= 50, got n = {G.n}")
    if not 1.0 < p <= 8.0:
        raise OracleError(f"p-norm oracle supports 1 < p <= 8, got {p}")
    b = np.asarray(b, dtype=float)
    T = RootedTree(G, minimum_spanning_tree_arcs(G, G.r))
    f0 = _tree_flow(G, T, b)
    B = _cycle_matrix(G, T)
    r = G.r
    y = np.zeros(B.shape[1])
    steps = 0
    # at p = 2 the smoothing only adds a constant
    mus = [1.0] if p == 2.0 else [10.0 ** (-k) for k in range(2, 11)]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))

    def energy(fv, mu):
        return float(np.dot(r, (fv * fv + mu * mu) ** (p / 2.0))) / p

    for mu in mus:
        for _ in range(200):
            if B.shape[1] == 0:
                break
            fv = f0 + B @ y
            s2 = fv * fv + mu * mu
            g1 = r * fv * s2 ** (p / 2.0 - 1.0)
            g2 = r * s2 ** (p / 2.0 - 2.0) * ((p - 1.0) * fv * fv + mu * mu)
            grad = B.T @ g1
            if np.max(np.abs(grad)) <= tol * scale ** (p - 1.0) * 1e-2:
                break
            Hm = B.T @ (g2[:, None] * B)
            Hm += 1e-300 * np.eye(len(y))
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                    step = -scipy.linalg.solve(Hm, grad, assume_a="pos")
            except (np.linalg.LinAlgError, ValueError, scipy.linalg.LinAlgWarning):
                step = -np.linalg.lstsq(Hm, grad, rcond=None)[0]
            e0 = energy(fv, mu)
            slope = float(np.dot(grad, step))
            t = 1.0
            while t > 1e-20:
                if energy(f0 + B @ (y + t * step), mu) <= e0 + 1e-4 * t * slope:
                    break
                t *= 0.5
            y = y + t * step
            steps += 1
            if steps > max_steps:
                raise OracleError("Newton did not converge")
            if t * np.max(np.abs(step), initial=0.0) <= 1e-16 * (1.0 + np.max(np.abs(y), initial=0.0)):
                break
    f = f0 + B @ y
    x = potentials_from_flow(G, T, f, p)
    if p < 2.0:
        # |f|^(p-1) is ill-conditioned near f = 0; polish in the smooth dual
        # and read the flow off the KKT map instead
        x, dual_steps = _dual_newton(G, b, x, p, tol, max_steps - steps)
        steps += dual_steps
        f = potential_defined_flow(G, x, p)
    kkt = kkt_residual(G, f, x, p, b)
    if not np.isfinite(kkt):
        raise OracleError("oracle produced non-finite values")
    return OracleResult(f=f, x=x, newton_steps=steps, kkt=kkt)


def _dual_newton(G: Graph, b, x, p: float, tol: float, max_steps: int):
    """Maximise b.x - (1/q) sum w |dx|^q (q > 2) by damped Newton from ``x``."""
    prm = PNormParams(p)
    q, w = prm.q, prm.weights(G)
    A = G.incidence().toarray().T  # m x n, row e = e_tail - e_head
    A = A[:, 1:]  # pin x(0) = 0
    z = (x - x[0])[1:]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    steps = 0
    for _ in range(max_steps):
        dx = A @ z
        grad = b[1:] - A.T @ (w * np.sign(dx) * np.abs(dx) ** (q - 1.0))
        if np.max(np.abs(grad), initial=0.0) <= tol * scale * 1e-2:
            break
        hw = (q - 1.0) * w * np.abs(dx) ** (q - 2.0)
        Hm = A.T @ (hw[:, None] * A)
        step = np.linalg.lstsq(Hm, grad, rcond=None)[0]
        d0 = dual_objective(G, np.r_[0.0, z], b, p)
        slope = float(np.dot(grad, step))
        t = 1.0
        while t > 1e-20:
            if dual_objective(G, np.r_[0.0, z + t * step], b, p) >= d0 + 1e-4 * t * slope:
                break
            t *= 0.5
        z = z + t * step
        steps += 1
        if t * np.max(np.abs(step), initial=0.0) <= 1e-16 * (1.0 + np.max(np.abs(z), initial=0.0)):
            break
    return np.r_[0.0, z], steps


def oracle_energy(G: Graph, b, p: float) -> float:
    """E(f*) for convenience."""
    if p == 2.0:
        return primal_energy(G, electrical_flow(G, b)[0])
    return primal_energy(G, pnorm_oracle(G, b, p).f, p)
