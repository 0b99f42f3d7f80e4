"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The statistical criteria are deterministic: all randomness is
path-keyed by fixed seeds, so a pass here is a permanent property of the
code, not a lucky draw.
"""

import math
import random
from dataclasses import replace
from statistics import fmean, median

import numpy as np
import pytest

from tadlora.harness.sweep import aggregate_median_T, min_running_average, summarize_run
from tadlora.metrics import cycle_average_cross, late_window
from tadlora.model import (
    ClientTask,
    LoraFactors,
    ModelDims,
    binary_skew_profile,
    compose,
    grad_blocks,
    local_objective,
    uniform_profile,
)
from tadlora.numerics import RngStream, finite_diff_grad, spectral_norm
from tadlora.protocol import (
    Method,
    MixSelection,
    RunConfig,
    TopologyConfig,
    estimate_phi,
    mix_blocks,
    run_training,
)
from tadlora.protocol_types import ClientState
from tadlora.topology import (
    MixingPolicy,
    build_base_graph,
    build_mixing_matrix,
    estimate_rho,
    sample_activation,
    spectral_gap_report,
    validate_doubly_stochastic,
)

GOSSIP = MixingPolicy("pairwise_gossip")
LAP = MixingPolicy("laplacian_step")


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{name} {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"{name}: {detail}"


# --- shared fixtures ---------------------------------------------------------


@pytest.fixture(scope="module")
def randomized_runs():
    """>= 50 randomized configurations covering all methods, m in {2,5,10},
    r in {1,4}; used by A1, A2, A4."""
    rng = random.Random(0)
    results = []
    methods = list(Method)
    for k in range(50):
        method = methods[k % len(methods)]
        m = rng.choice([2, 5, 10])
        r = rng.choice([1, 4])
        dims = rng.choice([ModelDims(6, 5, r), ModelDims(12, 10, r)])
        t_interval = rng.choice([1, 2, 4])
        cfg = RunConfig(
            dims=dims,
            m=m,
            method=method,
            T=t_interval,
            R=24,
            eta=rng.choice([0.05, 0.1]),
            batch_size=rng.choice([None, 4]),
            n_per_client=16,
            topology=TopologyConfig(
                p=rng.choice([0.05, 0.3, 0.8]),
                policy=rng.choice(["laplacian_step", "pairwise_gossip"]),
            ),
            heterogeneity=(
                binary_skew_profile(m, 1.0) if rng.random() < 0.5 else uniform_profile(m, 2, 1.0)
            ),
            root_seed=1000 + k,
            allow_ragged=True,
        )
        results.append(run_training(cfg))
    return results


@pytest.fixture(scope="module")
def trend_sweep():
    """The toy-scale method/T/p sweep shared by A11 and A13: 10 seeds,
    full-batch, pairwise gossip, R = 150."""
    seeds = range(10)
    cells = {}

    def run_cell(method, p, t, seed):
        cfg = RunConfig(
            method=method, T=t, R=150, eta=0.1,
            topology=TopologyConfig(p=p, policy="pairwise_gossip"),
            heterogeneity=binary_skew_profile(10, 1.0), root_seed=seed,
        )
        return summarize_run(run_training(cfg))

    for p in (0.5, 0.1, 0.02):
        for t in (1, 2, 3, 5, 10, 15):
            for s in seeds:
                cells[("tad_lora", p, t, s)] = run_cell(Method.TAD_LORA, p, t, s)
    for p in (0.5, 0.02):
        for name, meth in (("rolora_dfl", Method.ROLORA_DFL),
                           ("vanilla_lora", Method.VANILLA_LORA),
                           ("ffa_lora", Method.FFA_LORA)):
            for s in seeds:
                cells[(name, p, 1, s)] = run_cell(meth, p, 1, s)
    return cells


# --- criteria ----------------------------------------------------------------


def test_a01_decomposition_identity(randomized_runs):
    worst = 0.0
    rounds = 0
    for res in randomized_runs:
        for rec in res.records:
            worst = max(worst, rec.snapshot.decomposition_residual)
            rounds += 1
    _report(
        "A1", worst <= 1e-10,
        f"decomposition residual <= 1e-10 at every round "
        f"({len(randomized_runs)} runs, {rounds} rounds, worst {worst:.3e})",
    )


def test_a02_cauchy_schwarz_bound(randomized_runs):
    worst = min(
        rec.snapshot.bound_slack for res in randomized_runs for rec in res.records
    )
    _report("A2", worst >= -1e-10, f"min bound slack {worst:.3e} >= -1e-10")


def test_a03_double_stochasticity_and_mean_preservation():
    p_grid = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)
    per_cell = 10_000 // (len(p_grid) * 2) + 1
    graph = build_base_graph("complete", 10)
    rng_states = np.random.default_rng(0)
    states = [
        ClientState(
            id=i,
            factors=LoraFactors(
                A=rng_states.standard_normal((4, 12)),
                B=rng_states.standard_normal((16, 4)),
            ),
            task=ClientTask(client_id=i, Z=np.ones((2, 16)), Y=np.ones((2, 12))),
        )
        for i in range(10)
    ]
    a_bar = np.mean([s.factors.A for s in states], axis=0)
    b_bar = np.mean([s.factors.B for s in states], axis=0)
    checked = 0
    worst_mean_dev = 0.0
    root = RngStream(77).child("a3")
    for policy in (LAP, GOSSIP):
        for p in p_grid:
            for t in range(per_cell):
                act = sample_activation(graph, p, t, root.child(policy.kind, int(p * 100)))
                mix = build_mixing_matrix(act, policy, root.child(policy.kind, int(p * 100)))
                validate_doubly_stochastic(mix.W, tol=1e-12)
                mixed = mix_blocks(states, mix, MixSelection.BOTH)
                dev_a = np.max(np.abs(np.mean([s.factors.A for s in mixed], axis=0) - a_bar))
                dev_b = np.max(np.abs(np.mean([s.factors.B for s in mixed], axis=0) - b_bar))
                worst_mean_dev = max(worst_mean_dev, dev_a, dev_b)
                checked += 1
    _report(
        "A3", checked >= 10_000 and worst_mean_dev <= 1e-12,
        f"{checked} sampled matrices doubly stochastic at 1e-12; "
        f"worst block-average drift {worst_mean_dev:.3e}",
    )


def test_a04_frozen_block_contraction(randomized_runs):
    events = 0
    worst_excess = -math.inf
    for res in randomized_runs:
        for ev in res.contraction_events:
            events += 1
            bound = ev.rho_realized * ev.delta_pre * (1 + 1e-10) + 1e-15
            worst_excess = max(worst_excess, ev.delta_post - bound)
    ok = events >= 400 and worst_excess <= 0.0
    _report(
        "A4", ok,
        f"{events} frozen-block gossip steps all satisfy "
        f"post <= ||W - J||_2 * pre (worst excess {worst_excess:.3e})",
    )


def test_a05_gradient_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    count = 0
    for d_out, d_in, r in ((4, 3, 1), (8, 6, 2), (12, 10, 4)):
        for _ in range(20):
            task = ClientTask(
                client_id=0,
                Z=rng.standard_normal((8, d_out)),
                Y=rng.standard_normal((8, d_in)),
            )
            theta0 = rng.standard_normal((d_out, d_in))
            f = LoraFactors(
                A=rng.standard_normal((r, d_in)),
                B=rng.standard_normal((d_out, r)),
                scale=1.0,
            )
            ga, gb = grad_blocks(task, theta0, f)
            fa = finite_diff_grad(
                lambda a: local_objective(task, compose(theta0, LoraFactors(A=a, B=f.B))),
                f.A, eps=1e-5,
            )
            fb = finite_diff_grad(
                lambda b: local_objective(task, compose(theta0, LoraFactors(A=f.A, B=b))),
                f.B, eps=1e-5,
            )
            scale = max(1.0, float(np.max(np.abs(ga))), float(np.max(np.abs(gb))))
            worst = max(
                worst,
                float(np.max(np.abs(ga - fa))) / scale,
                float(np.max(np.abs(gb - fb))) / scale,
            )
            count += 1
    _report("A5", worst <= 1e-5, f"{count} instances, max relative error {worst:.2e}")


def test_a06_rho_closed_form():
    k2 = build_base_graph("complete", 2)
    details = []
    ok = True
    for i, p in enumerate((0.1, 0.5, 0.9)):
        est = estimate_rho(k2, p, GOSSIP, 10_000, RngStream(6).child("a6", i))
        dev = abs(est.rho_sq_hat - (1.0 - p))
        ok = ok and dev <= 4.0 * est.stderr
        details.append(f"p={p}: |rho2-{1-p:.1f}|={dev:.2e} (4se={4*est.stderr:.2e})")
    k3 = estimate_rho(
        build_base_graph("complete", 3), 1.0,
        MixingPolicy("laplacian_step", alpha=1.0 / 3.0), 100, RngStream(6),
    )
    ok = ok and k3.rho_hat <= 1e-12
    _report("A6", ok, "; ".join(details) + f"; K3 full-activation rho={k3.rho_hat:.1e}")


def test_a07_spectral_gap_scaling():
    p_grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5]
    ok = True
    details = []
    for kind in ("complete", "ring"):
        g = build_base_graph(kind, 10)
        # one stream for the whole grid couples the activation draws across
        # p (each sampled edge set grows monotonically with p), which makes
        # the estimated gap exactly nondecreasing and shrinks the variance
        # of every pairwise comparison
        report = spectral_gap_report(g, LAP, p_grid, 10_000, RngStream(7).child(kind))
        gaps = [row.one_minus_rho for row in report.rows]
        sds = [row.stderr / max(2.0 * row.rho_hat, 1e-6) for row in report.rows]
        nondecreasing = all(gaps[i + 1] >= gaps[i] for i in range(len(gaps) - 1))
        # strict 4-sigma separation where the Monte-Carlo resolution allows:
        # connectivity events at p <= 0.05 on 10 nodes are too rare for 1e4
        # samples to separate, so strictness is asserted on the upper grid
        strict_pairs = [(3, 4), (4, 5)] if kind == "complete" else [(4, 5)]
        strict = all(
            gaps[b] - gaps[a] >= 4.0 * math.hypot(sds[a], sds[b]) for a, b in strict_pairs
        )
        overall = gaps[-1] - gaps[0] >= 4.0 * math.hypot(sds[0], sds[-1])
        bound = all(
            row.one_minus_rho >= report.c_fit * row.p * row.lambda2 - 1e-12
            for row in report.rows
            if row.rho_hat < 1.0
        )
        ok = ok and nondecreasing and strict and overall and bound and report.c_fit > 0
        details.append(
            f"{kind}: gaps={['%.4f' % v for v in gaps]} c={report.c_fit:.3f}"
        )
    _report("A7", ok, "; ".join(details))


def test_a08_cycle_averaged_cross_term_decay():
    seeds = range(5)
    late_cut = 150 - math.ceil(0.4 * 150)
    means = {}
    for t_interval in (1, 5, 15):
        per_seed = []
        for s in seeds:
            cfg = RunConfig(
                method=Method.TAD_LORA, T=t_interval, R=150, eta=0.1,
                topology=TopologyConfig(p=0.1, policy="pairwise_gossip"),
                heterogeneity=binary_skew_profile(10, 1.0), root_seed=s,
            )
            res = run_training(cfg)
            stats = cycle_average_cross(res.records, t_interval)
            late = [c.mean_cross_norm for c in stats.means if c.cycle * t_interval >= late_cut]
            per_seed.append(fmean(late))
        means[t_interval] = fmean(per_seed)
    ratio = means[1] / means[15]
    ok = means[1] > means[5] > means[15] and ratio >= 3.0
    _report(
        "A8", ok,
        f"late cycle-mean cross norm T1={means[1]:.3e} > T5={means[5]:.3e} > "
        f"T15={means[15]:.3e}; ratio T1/T15 = {ratio:.2f} >= 3",
    )


def test_a09_steady_state_eta_squared_scaling():
    seeds = range(5)
    late_means = {}
    for eta in (0.1, 0.05):
        vals = []
        for s in seeds:
            cfg = RunConfig(
                method=Method.TAD_LORA, T=5, R=150, eta=eta,
                topology=TopologyConfig(p=0.1, policy="pairwise_gossip"),
                heterogeneity=binary_skew_profile(10, 1.0), root_seed=s,
            )
            res = run_training(cfg)
            late = late_window(res.records, 150, 0.4)
            vals.append(fmean(r.snapshot.delta_B_sq for r in late))
        late_means[eta] = fmean(vals)
    ratio = late_means[0.1] / late_means[0.05]
    _report(
        "A9", 2.0 <= ratio <= 8.0,
        f"late delta_B_sq ratio eta/ (eta/2) = {ratio:.2f} in [2, 8] (ideal 4)",
    )


def test_a10_alternation_bias_monotone_and_quadratic_in_eta():
    tol = 1e-5
    base = RunConfig(eta=0.1, root_seed=0)
    phis = {t: estimate_phi(base, t, convergence_tol=tol).phi for t in (1, 3, 5, 15)}
    half = replace(base, eta=0.05)
    phi15_half = estimate_phi(half, 15, convergence_tol=tol).phi
    ratio = phis[15] / phi15_half
    ok = (
        abs(phis[1]) <= 2 * tol
        and all(v >= -2 * tol for v in phis.values())
        and phis[15] >= phis[3] - 2 * tol
        and phi15_half < phis[15]
        and 2.0 <= ratio <= 8.0
    )
    _report(
        "A10", ok,
        f"phi(1)={phis[1]:.1e}, phi(3)={phis[3]:.2e}, phi(15)={phis[15]:.2e}, "
        f"eta-halving ratio {ratio:.2f} in [2, 8]",
    )


def test_a11_weak_regime_ordering(trend_sweep):
    seeds = range(10)

    def med(method, p, t):
        return median(
            trend_sweep[(method, p, t, s)].final_mean_global_loss for s in seeds
        )

    tad_best_002 = min(med("tad_lora", 0.02, t) for t in (1, 2, 3, 5, 10, 15))
    ro_002 = med("rolora_dfl", 0.02, 1)
    va_002 = med("vanilla_lora", 0.02, 1)
    tad_best_05 = min(med("tad_lora", 0.5, t) for t in (1, 2, 3, 5, 10, 15))
    best_05 = min(
        tad_best_05,
        med("rolora_dfl", 0.5, 1),
        med("vanilla_lora", 0.5, 1),
        med("ffa_lora", 0.5, 1),
    )
    rel = tad_best_05 / best_05 - 1.0
    ok = tad_best_002 <= ro_002 and tad_best_002 <= va_002 and rel <= 0.05
    _report(
        "A11", ok,
        f"p=0.02: tad {tad_best_002:.4f} <= rolora {ro_002:.4f}, vanilla {va_002:.4f}; "
        f"p=0.5: tad within {100 * rel:.2f}% of best",
    )


def test_a12_median_aggregation_exact():
    table = {
        0.5: ([1, 1, 1, 3], 1.50, 1.0),
        0.2: ([1, 5, 1, 5], 3.00, 3.0),
        0.1: ([5, 3, 3, 3], 3.50, 3.0),
        0.05: ([5, 5, 15, 5], 7.50, 5.0),
        0.02: ([3, 1, 15, 15], 8.50, 9.0),
        0.01: ([10, 5, 3, 3], 5.25, 4.0),
    }
    ok = True
    for p, (values, want_mean, want_median) in table.items():
        got_median, got_mean = aggregate_median_T(values)
        ok = ok and got_median == want_median and abs(got_mean - want_mean) < 1e-12
    _report("A12", ok, "all six (avg, median) pairs reproduced exactly")


def test_a13_optimal_interval_trend(trend_sweep):
    seeds = range(10)
    t_grid = (1, 2, 3, 5, 10, 15)
    medians = {}
    for p in (0.5, 0.1, 0.02):
        per_seed_best = []
        for s in seeds:
            by_t = {
                t: trend_sweep[("tad_lora", p, t, s)].final_mean_global_loss
                for t in t_grid
            }
            per_seed_best.append(min(by_t, key=by_t.get))
        medians[p] = median(per_seed_best)
    ok = medians[0.5] <= medians[0.1] <= medians[0.02]
    _report(
        "A13", ok,
        f"seed-median best T: p=0.5 -> {medians[0.5]}, p=0.1 -> {medians[0.1]}, "
        f"p=0.02 -> {medians[0.02]} (nondecreasing as p decreases)",
    )


def test_a14_stationarity_trend():
    seeds = range(5)
    mins = {}
    for r_total in (150, 300, 600):
        vals = []
        for s in seeds:
            cfg = RunConfig(
                method=Method.TAD_LORA, T=5, R=r_total, eta=0.05,
                topology=TopologyConfig(p=0.1, policy="pairwise_gossip"),
                heterogeneity=binary_skew_profile(10, 1.0), root_seed=s,
            )
            res = run_training(cfg)
            vals.append(min_running_average([rec.grad_norm_sq for rec in res.records]))
        mins[r_total] = median(vals)
    ok = mins[150] > mins[300] > mins[600]
    _report(
        "A14", ok,
        f"min running-average grad norm: R150={mins[150]:.4f} > "
        f"R300={mins[300]:.4f} > R600={mins[600]:.4f}",
    )
