"""Processing cut toggles in blocks gives the same answer faster.

Run with ``python demos/03_batched.py``.
"""

# %% Same seed, same cuts, same potentials, whatever the block size
import time

import numpy as np

from toggleflow import batched_dual_kosz, dual_kosz, low_stretch_tree
from toggleflow.batched import default_batch
from toggleflow.generators import grid_graph, st_supply

G = grid_graph(40)
b = st_supply(G.n)
T = low_stretch_tree(G)
ref = dual_kosz(G, b, 0.1, rng=5, tree=T, naive=True, iterations=5000)
K = ref.trace.config["K"]
print(f"grid n={G.n}, m={G.m}; running 5000 of the K={K} toggles")
t0 = time.perf_counter()
dual_kosz(G, b, 0.1, rng=5, tree=T, naive=True, iterations=5000)
base = time.perf_counter() - t0
print(f"  unbatched, O(m) queries: {base:.2f} s")

for l in (1, default_batch(G.m), 1000):
    t0 = time.perf_counter()
    out = batched_dual_kosz(G, b, 0.1, l, rng=5, tree=T, iterations=5000)
    dt = time.perf_counter() - t0
    diff = float(np.abs(out.x - ref.x).max())
    print(f"  block size {l:>5}: {dt:.2f} s, {out.trace.summary['blocks']:>5} blocks, max |x - x_ref| = {diff:.1e}")
