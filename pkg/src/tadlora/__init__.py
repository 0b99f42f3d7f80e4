"""Deterministic simulator and analysis toolkit for decentralized
alternating low-rank adaptation over time-varying gossip graphs."""

from tadlora.errors import (
    InvalidConfigError,
    InvalidInputError,
    NonConvergedError,
    TadLoraError,
)
from tadlora.model import (
    ClientTask,
    HeterogeneityProfile,
    LoraFactors,
    ModelDims,
    binary_skew_profile,
    compose,
    generate_tasks,
    grad_blocks,
    grad_theta,
    init_factors,
    local_objective,
    stochastic_grad_blocks,
    three_way_skew_profile,
    uniform_profile,
)
from tadlora.metrics import (
    ConsensusSnapshot,
    RoundRecord,
    avg_model_stats,
    block_disagreement,
    consensus_snapshot,
    cross_term,
    cycle_average_cross,
    decomposition_residual,
    late_window,
    measure_round,
)
from tadlora.numerics import (
    RngStream,
    algebraic_connectivity,
    finite_diff_grad,
    spectral_norm,
)
from tadlora.protocol import (
    ClientState,
    Method,
    MixSelection,
    Phase,
    RunConfig,
    RunResult,
    TopologyConfig,
    estimate_phi,
    local_update,
    mix_blocks,
    phase_at,
    run_training,
)
from tadlora.topology import (
    BaseGraph,
    MixingMatrix,
    MixingPolicy,
    build_base_graph,
    build_mixing_matrix,
    estimate_rho,
    sample_activation,
    spectral_gap_report,
)

__version__ = "0.1.0"
