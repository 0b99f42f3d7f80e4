"""Measurement of the consensus and cross-term quantities tracked per round.

The central identity: with W_bar = (1/m) sum_i B_i A_i and block averages
A_bar, B_bar,

    W_bar = B_bar @ A_bar + C,   C = (1/m) sum_i (B_i - B_bar)(A_i - A_bar),

holds exactly in exact arithmetic; ``decomposition_residual`` measures the
floating-point defect and must stay at rounding level. The averaged model
used for objective/gradient diagnostics is theta0 + scale * W_bar, i.e. the
average of the composed client models including the cross term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from tadlora.errors import InvalidInputError
from tadlora.model import ClientTask, compose, grad_theta, local_objective
from tadlora.numerics import Matrix, frob
from tadlora.protocol_types import ClientState, Phase


@dataclass(frozen=True)
class ConsensusSnapshot:
    round: int
    delta_A_sq: float
    delta_B_sq: float
    cross_norm: float
    decomposition_residual: float
    bound_slack: float


@dataclass(frozen=True)
class RoundRecord:
    round: int
    phase: Phase
    snapshot: ConsensusSnapshot
    F_avg_model: float
    grad_norm_sq: float
    mean_client_loss: float
    mean_global_loss: float
    rho_realized: float


def _stacks(states: Sequence[ClientState]) -> tuple[np.ndarray, np.ndarray]:
    if not states:
        raise InvalidInputError("need at least one client state")
    a = np.stack([s.factors.A for s in states])
    b = np.stack([s.factors.B for s in states])
    return a, b


def block_disagreement(states: Sequence[ClientState]) -> tuple[float, float]:
    """((1/m) sum ||A_i - A_bar||_F^2, same for B)."""
    a, b = _stacks(states)
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    m = a.shape[0]
    return float(np.sum(da * da)) / m, float(np.sum(db * db)) / m


def cross_term(states: Sequence[ClientState]) -> Matrix:
    """C = (1/m) sum_i (B_i - B_bar) @ (A_i - A_bar), in factor units."""
    a, b = _stacks(states)
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    return np.matmul(db, da).mean(axis=0)


def decomposition_residual(states: Sequence[ClientState]) -> float:
    """|| (1/m) sum B_i A_i - B_bar A_bar - C ||_F; an exact algebraic identity."""
    recon = np.stack([s.factors.B for s in states]).mean(axis=0) @ np.stack(
        [s.factors.A for s in states]
    ).mean(axis=0) + cross_term(states)
    return frob(products_mean(states) - recon)


def products_mean(states: Sequence[ClientState]) -> Matrix:
    a, b = _stacks(states)
    return np.matmul(b, a).mean(axis=0)


def consensus_snapshot(states: Sequence[ClientState], round_index: int) -> ConsensusSnapshot:
    delta_a_sq, delta_b_sq = block_disagreement(states)
    c_norm = frob(cross_term(states))
    slack = math.sqrt(delta_a_sq) * math.sqrt(delta_b_sq) - c_norm
    return ConsensusSnapshot(
        round=round_index,
        delta_A_sq=delta_a_sq,
        delta_B_sq=delta_b_sq,
        cross_norm=c_norm,
        decomposition_residual=decomposition_residual(states),
        bound_slack=slack,
    )


def avg_model_stats(
    states: Sequence[ClientState],
    theta0: Matrix,
    tasks: Sequence[ClientTask],
) -> tuple[float, float]:
    """(F(theta_bar), ||grad F(theta_bar)||_F^2) at the true averaged model.

    theta_bar = theta0 + scale * mean_i(B_i A_i): the average of composed
    models, which differs from composing the averaged factors by the cross
    term.
    """
    scale = states[0].factors.scale
    theta_bar = theta0 + scale * products_mean(states)
    m = len(tasks)
    f_avg = sum(local_objective(t, theta_bar) for t in tasks) / m
    g = sum(grad_theta(t, theta_bar) for t in tasks) / m
    return f_avg, float(np.sum(g * g))


def mean_client_loss(states: Sequence[ClientState], theta0: Matrix) -> float:
    """Each client's own loss at its own composed model, averaged."""
    total = 0.0
    for s in states:
        total += local_objective(s.task, compose(theta0, s.factors))
    return total / len(states)


def mean_global_loss(
    states: Sequence[ClientState], theta0: Matrix, tasks: Sequence[ClientTask]
) -> float:
    """The global objective evaluated at each client's own model, averaged.

    This is the collaborative-quality analog of scoring every client model
    on the shared evaluation set: it rewards models that capture the common
    structure, where the per-client training loss rewards personal fit.
    """
    m = len(tasks)
    total = 0.0
    for s in states:
        theta = compose(theta0, s.factors)
        total += sum(local_objective(t, theta) for t in tasks) / m
    return total / len(states)


def measure_round(
    states: Sequence[ClientState],
    theta0: Matrix,
    tasks: Sequence[ClientTask],
    round_index: int,
    phase: Phase,
    rho_realized: float,
) -> RoundRecord:
    f_avg, grad_sq = avg_model_stats(states, theta0, tasks)
    return RoundRecord(
        round=round_index,
        phase=phase,
        snapshot=consensus_snapshot(states, round_index),
        F_avg_model=f_avg,
        grad_norm_sq=grad_sq,
        mean_client_loss=mean_client_loss(states, theta0),
        mean_global_loss=mean_global_loss(states, theta0, tasks),
        rho_realized=rho_realized,
    )


class CycleMean(NamedTuple):
    cycle: int
    phase: Phase
    mean_cross_norm: float


class CycleStats(NamedTuple):
    means: list[CycleMean]
    dropped_incomplete: bool


def cycle_average_cross(records: Sequence[RoundRecord], T: int) -> CycleStats:
    """Per-cycle means of ||C||_F over consecutive length-T phase cycles.

    Records must cover at least two full cycles of consecutive rounds. A
    trailing incomplete cycle is dropped and flagged. Each cycle carries the
    phase that was active during it, so the two alternation directions can
    be reported separately.
    """
    if T < 1:
        raise InvalidInputError(f"T must be >= 1, got {T}")
    by_cycle: dict[int, list[RoundRecord]] = {}
    for rec in records:
        by_cycle.setdefault(rec.round // T, []).append(rec)
    complete = {k: v for k, v in by_cycle.items() if len(v) == T}
    dropped = len(complete) != len(by_cycle)
    if len(complete) < 2:
        raise InvalidInputError(
            f"need at least 2 full cycles of length T={T}, got {len(complete)}"
        )
    means = [
        CycleMean(
            cycle=k,
            phase=recs[0].phase,
            mean_cross_norm=sum(r.snapshot.cross_norm for r in recs) / T,
        )
        for k, recs in sorted(complete.items())
    ]
    return CycleStats(means=means, dropped_incomplete=dropped)


def late_window(records: Sequence[RoundRecord], total_rounds: int, frac: float = 0.4) -> list[RoundRecord]:
    """Records from the last ``frac`` of the round horizon (steady state)."""
    cutoff = total_rounds - int(math.ceil(frac * total_rounds))
    return [r for r in records if r.round >= cutoff]
