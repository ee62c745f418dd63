"""Spanning trees, stretch and the cut sampling distribution.

Run with ``python demos/02_spanning_trees.py``.
"""

# %% The sampling normaliser of cut toggling is the total stretch of the tree
import numpy as np

from toggleflow import build_cut_table, low_stretch_tree, total_stretch
from toggleflow.generators import grid_graph, random_gnm, st_supply

G = grid_graph(12)
b = st_supply(G.n)
mst = low_stretch_tree(G, max_swaps=0)
tuned = low_stretch_tree(G)
for name, T in (("minimum spanning tree", mst), ("after exchanges", tuned)):
    tab = build_cut_table(G, T, b)
    print(f"{name:>22}: stretch {total_stretch(G, T, G.r):8.1f}   tau {tab.tau:8.1f}")

# %% Lower stretch means fewer iterations: K = ceil(tau ln(tau / eps))
for name, T in (("minimum spanning tree", mst), ("after exchanges", tuned)):
    tau = build_cut_table(G, T, b).tau
    print(f"{name:>22}: K at eps = 0.1 is {int(np.ceil(tau * np.log(tau / 0.1)))}")

# %% Cuts are sampled in proportion to r(e) / R(C): well-connected cuts are rarer
G = random_gnm(30, 80, rmax=10.0, rng=np.random.default_rng(3))
T = low_stretch_tree(G)
tab = build_cut_table(G, T, st_supply(G.n))
order = np.argsort(-tab.P[T.edges])
print("most likely cuts (child vertex, subtree size, probability):")
for v in T.edges[order[:5]]:
    print(f"  {v:>3}  {len(T.subtree(v)):>3}  {tab.P[v]:.3f}")
