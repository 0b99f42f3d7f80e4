"""Low-rank model substrate: theta = theta0 + s * B @ A, per-client quadratic
least-squares objectives with closed-form gradients, and task generation.

Each client holds a task f_i(theta) = ||Z theta - Y_i||_F^2 / (2 n). The
design matrix Z is shared across clients so that identical targets produce
bitwise-identical tasks; heterogeneity enters purely through the targets,
which are skewed mixtures of a few shared low-rank components plus a
delta-scaled per-client perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from tadlora.errors import InvalidConfigError, InvalidInputError
from tadlora.numerics import Matrix, RngStream, as_matrix


@dataclass(frozen=True)
class ModelDims:
    d_out: int
    d_in: int
    r: int

    def __post_init__(self):
        if self.d_out < 1 or self.d_in < 1:
            raise InvalidConfigError(f"dims must be positive, got {self}")
        if not (1 <= self.r <= min(self.d_out, self.d_in)):
            raise InvalidConfigError(
                f"rank r={self.r} must lie in [1, min(d_out, d_in)={min(self.d_out, self.d_in)}]"
            )


@dataclass(frozen=True)
class LoraFactors:
    A: Matrix  # r x d_in
    B: Matrix  # d_out x r
    scale: float = 1.0

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        if a.shape[0] != b.shape[1]:
            raise InvalidInputError(
                f"rank mismatch: A is {a.shape}, B is {b.shape}"
            )
        if self.scale <= 0.0:
            raise InvalidInputError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class ClientTask:
    client_id: int
    Z: Matrix  # n x d_out
    Y: Matrix  # n x d_in

    def __post_init__(self):
        z = as_matrix(self.Z, "Z")
        y = as_matrix(self.Y, "Y")
        if z.shape[0] != y.shape[0]:
            raise InvalidInputError(f"Z has {z.shape[0]} rows but Y has {y.shape[0]}")

    @property
    def n(self) -> int:
        return self.Z.shape[0]


@dataclass(frozen=True)
class HeterogeneityProfile:
    skew: tuple[tuple[float, ...], ...]
    delta: float = 1.0

    def __post_init__(self):
        if not self.skew:
            raise InvalidConfigError("skew must have at least one client row")
        width = len(self.skew[0])
        for row in self.skew:
            if len(row) != width:
                raise InvalidConfigError("all skew rows must have the same length")
            if any(w < 0.0 for w in row) or abs(sum(row) - 1.0) > 1e-9:
                raise InvalidConfigError(f"skew row {row} is not a probability vector")
        if self.delta < 0.0:
            raise InvalidConfigError(f"delta must be nonnegative, got {self.delta}")

    @property
    def k_components(self) -> int:
        return len(self.skew[0])

    @property
    def m(self) -> int:
        return len(self.skew)


def binary_skew_profile(m: int, delta: float = 1.0) -> HeterogeneityProfile:
    """Two-component label-skew analog: ~30% [0.9,0.1], ~30% [0.1,0.9], rest [0.5,0.5]."""
    n1 = (3 * m) // 10
    n2 = (3 * m) // 10
    if m >= 2 and n1 == 0:
        n1 = n2 = 1
    rows = [(0.9, 0.1)] * n1 + [(0.1, 0.9)] * n2 + [(0.5, 0.5)] * (m - n1 - n2)
    return HeterogeneityProfile(skew=tuple(rows), delta=delta)


def three_way_skew_profile(m: int, delta: float = 1.0) -> HeterogeneityProfile:
    """Three-component skew analog: ~40% / ~30% / ~30% dominant-component groups."""
    n1 = (4 * m) // 10
    n2 = (3 * m) // 10
    if m >= 3 and min(n1, n2) == 0:
        n1 = n2 = 1
    rows = (
        [(0.9, 0.05, 0.05)] * n1
        + [(0.05, 0.9, 0.05)] * n2
        + [(0.05, 0.05, 0.9)] * (m - n1 - n2)
    )
    return HeterogeneityProfile(skew=tuple(rows), delta=delta)


def uniform_profile(m: int, k: int = 2, delta: float = 1.0) -> HeterogeneityProfile:
    rows = [tuple(1.0 / k for _ in range(k))] * m
    return HeterogeneityProfile(skew=tuple(rows), delta=delta)


def compose(theta0: Matrix, f: LoraFactors) -> Matrix:
    """The composed model theta0 + scale * B @ A."""
    t0 = as_matrix(theta0, "theta0")
    if f.B.shape[0] != t0.shape[0] or f.A.shape[1] != t0.shape[1]:
        raise InvalidInputError(
            f"theta0 {t0.shape} incompatible with B {f.B.shape} @ A {f.A.shape}"
        )
    return t0 + f.scale * (f.B @ f.A)


def local_objective(task: ClientTask, theta: Matrix) -> float:
    th = as_matrix(theta, "theta")
    if th.shape != (task.Z.shape[1], task.Y.shape[1]):
        raise InvalidInputError(
            f"theta {th.shape} incompatible with Z {task.Z.shape}, Y {task.Y.shape}"
        )
    resid = task.Z @ th - task.Y
    return float(np.sum(resid * resid)) / (2.0 * task.n)


def grad_theta(task: ClientTask, theta: Matrix) -> Matrix:
    th = as_matrix(theta, "theta")
    if th.shape != (task.Z.shape[1], task.Y.shape[1]):
        raise InvalidInputError(
            f"theta {th.shape} incompatible with Z {task.Z.shape}, Y {task.Y.shape}"
        )
    return task.Z.T @ (task.Z @ th - task.Y) / task.n


def grad_blocks(task: ClientTask, theta0: Matrix, f: LoraFactors) -> tuple[Matrix, Matrix]:
    """Chain-rule block gradients (gA, gB) of the local objective at (A, B)."""
    g = grad_theta(task, compose(theta0, f))
    return f.scale * (f.B.T @ g), f.scale * (g @ f.A.T)


def stochastic_grad_blocks(
    task: ClientTask,
    theta0: Matrix,
    f: LoraFactors,
    batch_size: int,
    rng: RngStream,
) -> tuple[Matrix, Matrix]:
    """Block gradients on a uniform without-replacement row subset.

    batch_size == n bypasses sampling entirely and reproduces grad_blocks
    bit for bit (no stream consumption).
    """
    if not (1 <= batch_size <= task.n):
        raise InvalidConfigError(
            f"batch_size={batch_size} outside [1, {task.n}]"
        )
    if batch_size == task.n:
        return grad_blocks(task, theta0, f)
    gen = rng.generator()
    idx = np.sort(gen.choice(task.n, size=batch_size, replace=False))
    sub = ClientTask(client_id=task.client_id, Z=task.Z[idx], Y=task.Y[idx])
    return grad_blocks(sub, theta0, f)


class TaskSet(NamedTuple):
    theta0: Matrix
    tasks: list[ClientTask]
    theta_star_ref: Matrix


def generate_tasks(
    dims: ModelDims,
    m: int,
    profile: HeterogeneityProfile,
    n_per_client: int,
    rng: RngStream,
) -> TaskSet:
    """Draw the shared base model, component targets, and per-client tasks.

    Targets are Theta_i = sum_c skew_i[c] * Theta^(c) + delta * P_i where each
    Theta^(c) = theta0 + B^(c) A^(c) has rank at most r about theta0 and P_i is
    a unit-Frobenius-scale Gaussian perturbation. theta_star_ref is the exact
    unconstrained minimizer of the global objective (normal equations).
    """
    if m != profile.m:
        raise InvalidConfigError(
            f"profile has {profile.m} skew rows but m={m}"
        )
    if profile.k_components > 4:
        raise InvalidConfigError("at most 4 mixture components supported")
    if n_per_client < 1:
        raise InvalidConfigError(f"n_per_client must be >= 1, got {n_per_client}")

    base = rng.child("tasks")
    d_out, d_in, r = dims.d_out, dims.d_in, dims.r

    theta0 = base.child("theta0").generator().standard_normal((d_out, d_in)) / np.sqrt(d_in)
    deltas = []
    for c in range(profile.k_components):
        gen = base.child("component", c).generator()
        a_c = gen.standard_normal((r, d_in)) / np.sqrt(d_in)
        b_c = gen.standard_normal((d_out, r)) / np.sqrt(r)
        deltas.append(b_c @ a_c)

    z = base.child("design").generator().standard_normal((n_per_client, d_out))

    tasks = []
    for i in range(m):
        target = theta0 + sum(w * d for w, d in zip(profile.skew[i], deltas))
        if profile.delta > 0.0:
            pert = base.child("perturb", i).generator().standard_normal((d_out, d_in))
            target = target + profile.delta * pert / np.sqrt(d_out * d_in)
        tasks.append(ClientTask(client_id=i, Z=z, Y=z @ target))

    # Global optimum of (1/m) sum_i ||Z_i theta - Y_i||^2 / (2 n_i):
    # solve (sum Z_i^T Z_i / n_i) theta = sum Z_i^T Y_i / n_i.
    lhs = np.zeros((d_out, d_out))
    rhs = np.zeros((d_out, d_in))
    for task in tasks:
        lhs += task.Z.T @ task.Z / task.n
        rhs += task.Z.T @ task.Y / task.n
    theta_star, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return TaskSet(theta0=theta0, tasks=tasks, theta_star_ref=theta_star)


def init_factors(dims: ModelDims, m: int, scale: float, rng: RngStream) -> list[LoraFactors]:
    """Shared standard initialization: A ~ N(0, 1/d_in) entries, B = 0.

    Every client starts from the same draw, so all consensus quantities are
    exactly zero at round 0.
    """
    gen = rng.child("init").generator()
    a0 = gen.standard_normal((dims.r, dims.d_in)) / np.sqrt(dims.d_in)
    b0 = np.zeros((dims.d_out, dims.r))
    return [LoraFactors(A=a0.copy(), B=b0.copy(), scale=scale) for _ in range(m)]


def task_summary(ts: TaskSet, dims: ModelDims, root_seed: int) -> dict:
    """Small JSON-friendly dump for debugging task generation."""
    return {
        "root_seed": root_seed,
        "dims": {"d_out": dims.d_out, "d_in": dims.d_in, "r": dims.r},
        "n_per_client": ts.tasks[0].n if ts.tasks else 0,
        "theta0_frob": float(np.linalg.norm(ts.theta0)),
        "theta_star_frob": float(np.linalg.norm(ts.theta_star_ref)),
        "client_target_frob": [
            float(np.linalg.norm(np.linalg.lstsq(t.Z, t.Y, rcond=None)[0]))
            for t in ts.tasks
        ],
    }
