"""Cycle- and cut-toggling solvers for Laplacian systems and p-norm flows."""

from .batched import batched_dual_kosz, contract_block, propagate_block
from .graph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    InfeasibleFlowError,
    PNormParams,
    apply_laplacian,
    check_supply,
    dual_objective,
    duality_gap,
    flow_divergence,
    potential_defined_flow,
    primal_energy,
    read_graph,
    read_supply,
    write_graph,
    write_supply,
)
from .laplacian import cut_toggle_step, dual_kosz, kosz, tree_defined_flow, tree_defined_potentials
from .oracles import pnorm_oracle, solve_laplacian_dense
from .pnorm import (
    ConversionParams,
    cut_delta_root,
    cycle_delta_root,
    dual_to_flow,
    kkt_residual,
    pnorm_cut_solve,
    pnorm_cycle_solve,
)
from .recursive import (
    ContractedSystem,
    RecursionParams,
    contract_partition,
    optimal_batch_delta,
    recursive_solve,
    spectral_approx_check,
    spectral_sparsify,
)
from .trace import SolveResult, SolverTrace
from .tree import (
    CutTable,
    RootedTree,
    build_cut_table,
    fundamental_cut,
    fundamental_cycle,
    low_stretch_tree,
    total_stretch,
)
from .treeflow import NaiveTreeFlow, TableTreeFlow, interaction_table

__version__ = "0.1.0"
