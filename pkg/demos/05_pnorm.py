"""Minimum p-norm flows: cut toggling for p < 2, cycle toggling for p > 2.

Run with ``python demos/05_pnorm.py``.
"""

# %% Both regimes against a Newton oracle on a small network
import numpy as np

from toggleflow import kkt_residual, pnorm_cut_solve, pnorm_cycle_solve, pnorm_oracle, primal_energy
from toggleflow.generators import random_gnm, random_supply

rng = np.random.default_rng(2)
G = random_gnm(12, 24, rmax=5.0, rng=rng)
b = random_supply(G.n, rng)

for p in (1.5, 1.8, 3.0, 4.0):
    solver = pnorm_cut_solve if p < 2 else pnorm_cycle_solve
    res = solver(G, b, p, eps=0.05, rng=0)
    E_star = primal_energy(G, pnorm_oracle(G, b, p).f, p)
    s = res.trace.summary
    print(
        f"p={p}: {solver.__name__:<17} {s['iterations_run']:>5} iterations ({s['stopped']}),"
        f" energy / optimum {primal_energy(G, res.f, p) / E_star:.8f},"
        f" KKT residual {kkt_residual(G, res.f, res.x, p, b):.1e}"
    )

# %% Larger p spreads flow more evenly over the network
for p in (1.5, 2.0, 4.0):
    f = pnorm_oracle(G, b, p).f
    print(f"p={p}: largest |flow| {np.abs(f).max():.3f}, arcs carrying > 1% of it: {int(np.sum(np.abs(f) > 0.01 * np.abs(f).max()))}")
