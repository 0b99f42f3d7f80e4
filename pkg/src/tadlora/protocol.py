"""The decentralized training loop: phase schedule, local updates, block
mixing per method variant, and the full multi-round simulation.

Round structure (repeated for t = 0..R-1): local update first, then one
mixing step with the round's sampled matrix W_t. Method variants differ in
which block the local update touches and which blocks get mixed:

    tad_lora         alternating update, BOTH blocks mixed every round
    rolora_dfl       alternating update, only the active block mixed
    ffa_lora         B updated every round, A frozen at init and never mixed
    vanilla_lora     both blocks updated (simultaneous), both mixed
    centralized_alt  alternating update, exact averaging (W = J)

Everything is a pure function of the run configuration: randomness comes
from path-keyed streams, so two runs with equal configs are bitwise equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from tadlora.errors import InvalidConfigError, InvalidInputError, NonConvergedError
from tadlora.metrics import RoundRecord, block_disagreement, measure_round
from tadlora.model import (
    ClientTask,
    HeterogeneityProfile,
    LoraFactors,
    ModelDims,
    TaskSet,
    binary_skew_profile,
    compose,
    generate_tasks,
    grad_blocks,
    init_factors,
    local_objective,
    stochastic_grad_blocks,
)
from tadlora.numerics import Matrix, RngStream
from tadlora.protocol_types import ClientState, Method, MixSelection, Phase
from tadlora.topology import (
    BaseGraph,
    MixingMatrix,
    MixingPolicy,
    build_base_graph,
    build_mixing_matrix,
    consensus_projector,
    realized_contraction,
    sample_activation,
)

__all__ = [
    "Phase",
    "Method",
    "MixSelection",
    "ClientState",
    "TopologyConfig",
    "RunConfig",
    "RunResult",
    "ContractionEvent",
    "PhiEstimate",
    "phase_at",
    "local_update",
    "mix_blocks",
    "run_training",
    "estimate_phi",
]


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "complete"
    p: float | None = None  # None -> 1.0 on a ring, 0.5 otherwise
    policy: str = "laplacian_step"
    alpha: float | None = None
    edges: tuple[tuple[int, int], ...] | None = None  # custom graphs only

    def resolved_p(self) -> float:
        if self.p is not None:
            return self.p
        return 1.0 if self.kind == "ring" else 0.5

    def mixing_policy(self) -> MixingPolicy:
        return MixingPolicy(kind=self.policy, alpha=self.alpha)


@dataclass(frozen=True)
class RunConfig:
    dims: ModelDims = field(default_factory=lambda: ModelDims(16, 12, 4))
    m: int = 10
    method: Method = Method.TAD_LORA
    T: int = 1
    R: int = 150
    eta: float = 0.1
    local_steps: int = 1
    batch_size: int | None = None  # None -> full batch
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    heterogeneity: HeterogeneityProfile | None = None  # None -> binary skew
    root_seed: int = 0
    scale: float = 1.0
    n_per_client: int = 64
    record_every: int = 1
    start_phase: Phase = Phase.B
    allow_ragged: bool = False

    def profile(self) -> HeterogeneityProfile:
        if self.heterogeneity is not None:
            return self.heterogeneity
        return binary_skew_profile(self.m)

    def validate(self) -> None:
        if self.m < 1:
            raise InvalidConfigError(f"m={self.m} must be >= 1")
        if self.R < 1:
            raise InvalidConfigError(f"R={self.R} must be >= 1")
        if self.T < 1:
            raise InvalidConfigError(f"T={self.T} must be >= 1")
        if self.eta <= 0.0:
            raise InvalidConfigError(f"eta={self.eta} must be positive")
        if self.local_steps < 1:
            raise InvalidConfigError(f"local_steps={self.local_steps} must be >= 1")
        if self.record_every < 1:
            raise InvalidConfigError(f"record_every={self.record_every} must be >= 1")
        if self.R % self.T != 0 and not self.allow_ragged:
            raise InvalidConfigError(
                f"T={self.T} does not divide R={self.R}; incomplete final cycles "
                f"raise run-to-run variance (set allow_ragged to override)"
            )
        if self.batch_size is not None and not (1 <= self.batch_size <= self.n_per_client):
            raise InvalidConfigError(
                f"batch_size={self.batch_size} outside [1, {self.n_per_client}]"
            )
        if self.profile().m != self.m:
            raise InvalidConfigError(
                f"heterogeneity profile has {self.profile().m} rows, m={self.m}"
            )


def phase_at(t: int, T: int, start_phase: Phase = Phase.B) -> Phase:
    """Phase of round t: the start phase while floor(t/T) is even, else the other."""
    if t < 0 or T < 1:
        raise InvalidInputError(f"need t >= 0 and T >= 1, got t={t}, T={T}")
    first = (t // T) % 2 == 0
    if start_phase is Phase.B:
        return Phase.B if first else Phase.A
    return Phase.A if first else Phase.B


def _updated_blocks(method: Method, phase: Phase) -> tuple[bool, bool]:
    """(update A?, update B?) for this round."""
    if method is Method.FFA_LORA:
        return False, True
    if method is Method.VANILLA_LORA:
        return True, True
    return (phase is Phase.A), (phase is Phase.B)


def mixing_selection(method: Method, phase: Phase) -> MixSelection:
    if method in (Method.TAD_LORA, Method.VANILLA_LORA, Method.CENTRALIZED_ALT):
        return MixSelection.BOTH
    if method is Method.FFA_LORA:
        return MixSelection.B_ONLY
    # rolora_dfl: only the active block is synchronized
    return MixSelection.A_ONLY if phase is Phase.A else MixSelection.B_ONLY


def local_update(
    state: ClientState,
    theta0: Matrix,
    phase: Phase,
    method: Method,
    eta: float,
    local_steps: int,
    batch_size: int | None,
    rng: RngStream,
) -> ClientState:
    """Run ``local_steps`` sequential gradient steps on this round's active
    block(s); frozen blocks are returned untouched (same array object)."""
    upd_a, upd_b = _updated_blocks(method, phase)
    if not (upd_a or upd_b) or eta == 0.0:
        return state
    f = state.factors
    a, b = f.A, f.B
    n = state.task.n
    bs = n if batch_size is None else batch_size
    for step in range(local_steps):
        cur = LoraFactors(A=a, B=b, scale=f.scale)
        if bs == n:
            ga, gb = grad_blocks(state.task, theta0, cur)
        else:
            ga, gb = stochastic_grad_blocks(
                state.task, theta0, cur, bs, rng.child("step", step)
            )
        if upd_a:
            a = a - eta * ga
        if upd_b:
            b = b - eta * gb
    return ClientState(id=state.id, factors=LoraFactors(A=a, B=b, scale=f.scale), task=state.task)


def mix_blocks(
    states: Sequence[ClientState],
    w: MixingMatrix | np.ndarray,
    which: MixSelection,
) -> list[ClientState]:
    """Replace the selected blocks with their W-weighted neighbor combinations.

    Unselected blocks keep their exact array objects; double stochasticity of
    W preserves the block averages.
    """
    w_arr = w.W if isinstance(w, MixingMatrix) else np.asarray(w, dtype=np.float64)
    m = len(states)
    if w_arr.shape != (m, m):
        raise InvalidInputError(f"mixing matrix {w_arr.shape} does not match m={m}")
    if which is MixSelection.NONE:
        return list(states)
    out = []
    mix_a = which in (MixSelection.BOTH, MixSelection.A_ONLY)
    mix_b = which in (MixSelection.BOTH, MixSelection.B_ONLY)
    a_new = np.tensordot(w_arr, np.stack([s.factors.A for s in states]), axes=1) if mix_a else None
    b_new = np.tensordot(w_arr, np.stack([s.factors.B for s in states]), axes=1) if mix_b else None
    for i, s in enumerate(states):
        out.append(
            ClientState(
                id=s.id,
                factors=LoraFactors(
                    A=a_new[i] if mix_a else s.factors.A,
                    B=b_new[i] if mix_b else s.factors.B,
                    scale=s.factors.scale,
                ),
                task=s.task,
            )
        )
    return out


class ContractionEvent(NamedTuple):
    """One frozen-block gossip step: disagreement before/after mixing."""

    round: int
    block: str  # "A" or "B"
    delta_pre: float  # sqrt of mean squared disagreement before mixing
    delta_post: float
    rho_realized: float


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    records: list[RoundRecord]
    final_states: list[ClientState]
    contraction_events: list[ContractionEvent]
    theta0: Matrix
    tasks: list[ClientTask]
    theta_star_ref: Matrix


def _setup(cfg: RunConfig) -> tuple[RngStream, TaskSet, list[ClientState], BaseGraph | None]:
    cfg.validate()
    root = RngStream(cfg.root_seed)
    ts = generate_tasks(cfg.dims, cfg.m, cfg.profile(), cfg.n_per_client, root)
    factors = init_factors(cfg.dims, cfg.m, cfg.scale, root)
    states = [
        ClientState(id=i, factors=f, task=t)
        for i, (f, t) in enumerate(zip(factors, ts.tasks))
    ]
    graph = None
    if cfg.m > 1 and cfg.method is not Method.CENTRALIZED_ALT:
        graph = build_base_graph(cfg.topology.kind, cfg.m, cfg.topology.edges)
    return root, ts, states, graph


def run_training(cfg: RunConfig) -> RunResult:
    """Simulate the full R-round protocol and record per-round metrics."""
    root, ts, states, graph = _setup(cfg)
    policy = cfg.topology.mixing_policy()
    p = cfg.topology.resolved_p()
    m = cfg.m
    j = consensus_projector(m)
    exact_avg = cfg.method is Method.CENTRALIZED_ALT or m == 1

    records: list[RoundRecord] = []
    events: list[ContractionEvent] = []
    for t in range(cfg.R):
        phase = phase_at(t, cfg.T, cfg.start_phase)
        batch_root = root.child("batch", t)
        updated = [
            local_update(
                s, ts.theta0, phase, cfg.method, cfg.eta,
                cfg.local_steps, cfg.batch_size, batch_root.child("client", i),
            )
            for i, s in enumerate(states)
        ]
        if exact_avg:
            w_arr = j
            rho_real = 0.0
        else:
            act = sample_activation(graph, p, t, root)
            mix = build_mixing_matrix(act, policy, root)
            w_arr = mix.W
            rho_real = realized_contraction(w_arr)
        which = mixing_selection(cfg.method, phase)
        mixed = mix_blocks(updated, w_arr, which)

        upd_a, upd_b = _updated_blocks(cfg.method, phase)
        mix_a = which in (MixSelection.BOTH, MixSelection.A_ONLY)
        mix_b = which in (MixSelection.BOTH, MixSelection.B_ONLY)
        pre_a, pre_b = block_disagreement(updated)
        post_a, post_b = block_disagreement(mixed)
        if mix_a and not upd_a:
            events.append(ContractionEvent(t, "A", pre_a ** 0.5, post_a ** 0.5, rho_real))
        if mix_b and not upd_b:
            events.append(ContractionEvent(t, "B", pre_b ** 0.5, post_b ** 0.5, rho_real))

        states = mixed
        if t % cfg.record_every == 0 or t == cfg.R - 1:
            records.append(measure_round(states, ts.theta0, ts.tasks, t, phase, rho_real))

    return RunResult(
        config=cfg,
        records=records,
        final_states=states,
        contraction_events=events,
        theta0=ts.theta0,
        tasks=ts.tasks,
        theta_star_ref=ts.theta_star_ref,
    )


class PhiEstimate(NamedTuple):
    T: int
    phi: float
    tol: float
    f_end_T: float
    f_end_1: float
    rounds_T: int
    rounds_1: int


def _centralized_descent(
    cfg: RunConfig, T: int, tol: float, max_rounds: int
) -> tuple[float, int]:
    """Exact-averaging alternating descent with a gradient-norm stopping rule.

    With full-batch single-step updates and W = J, all clients stay identical
    and the network collapses to one iterate driven by the mean gradient,
    whose sufficient statistics (mean Gram matrix and cross moment) are
    precomputed. The run stops when the active block's gradient norm falls to
    ``tol``; with a long interval that can happen at a partial minimum
    against the stale frozen block, which is exactly the staleness cost the
    estimate exists to expose. The rule is armed only after the first full
    cycle so a zero-initialized block cannot trigger it spuriously.

    Returns (F at stop, rounds used); raises NonConvergedError at the budget.
    """
    root = RngStream(cfg.root_seed)
    ts = generate_tasks(cfg.dims, cfg.m, cfg.profile(), cfg.n_per_client, root)
    f0 = init_factors(cfg.dims, cfg.m, cfg.scale, root)[0]
    a, b, scale = f0.A, f0.B, f0.scale

    h_bar = np.zeros((cfg.dims.d_out, cfg.dims.d_out))
    r_bar = np.zeros((cfg.dims.d_out, cfg.dims.d_in))
    for task in ts.tasks:
        h_bar += task.Z.T @ task.Z / task.n
        r_bar += task.Z.T @ task.Y / task.n
    h_bar /= cfg.m
    r_bar /= cfg.m

    grad_norm = float("inf")
    for t in range(max_rounds):
        g_full = h_bar @ (ts.theta0 + scale * (b @ a)) - r_bar
        phase = phase_at(t, T, cfg.start_phase)
        if phase is Phase.A:
            g = scale * (b.T @ g_full)
        else:
            g = scale * (g_full @ a.T)
        grad_norm = float(np.sqrt(np.sum(g * g)))
        if t >= 2 * T and grad_norm <= tol:
            theta = compose(ts.theta0, LoraFactors(A=a, B=b, scale=scale))
            f_val = sum(local_objective(task, theta) for task in ts.tasks) / cfg.m
            return f_val, t
        if phase is Phase.A:
            a = a - cfg.eta * g
        else:
            b = b - cfg.eta * g
    raise NonConvergedError(
        f"centralized alternating descent (T={T}) did not reach active-block "
        f"gradient norm {tol} within {max_rounds} rounds (last norm {grad_norm:.3e})",
        rounds=max_rounds,
        grad_norm=grad_norm,
    )


def estimate_phi(
    cfg_base: RunConfig,
    T: int,
    convergence_tol: float = 1e-9,
    max_rounds: int = 500_000,
) -> PhiEstimate:
    """Alternation-bias estimate: F at convergence with interval T minus with
    interval 1, both from the same initialization.

    The value is reported raw and can be slightly negative within solver
    tolerance. Uses full-batch single-step exact-averaging dynamics; ragged
    horizons are irrelevant because the stopping rule is gradient-based.
    """
    if T < 1:
        raise InvalidConfigError(f"T={T} must be >= 1")
    if convergence_tol <= 0.0:
        raise InvalidConfigError("convergence_tol must be positive")
    cfg = replace(cfg_base, method=Method.CENTRALIZED_ALT, local_steps=1,
                  batch_size=None, allow_ragged=True)
    f_t, rounds_t = _centralized_descent(cfg, T, convergence_tol, max_rounds)
    f_1, rounds_1 = _centralized_descent(cfg, 1, convergence_tol, max_rounds)
    return PhiEstimate(
        T=T,
        phi=f_t - f_1,
        tol=convergence_tol,
        f_end_T=f_t,
        f_end_1=f_1,
        rounds_T=rounds_t,
        rounds_1=rounds_1,
    )
