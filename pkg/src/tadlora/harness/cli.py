"""Command-line interface.

Subcommands:
    run         single training cell from a config file
    sweep       full (method, p, T, seed) grid
    best-t      best switching interval per (method, p) plus median/mean
    rho-report  spectral-gap diagnostics CSV for a base graph
    phi         alternation-bias estimates for a list of intervals

Exit codes: 0 success, 1 any sweep cell failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from tadlora.errors import InvalidConfigError, TadLoraError
from tadlora.harness.config import emit_config, parse_config
from tadlora.harness.sweep import (
    SELECTION_METRICS,
    aggregate_median_T,
    atomic_write,
    fmt,
    parse_results_csv,
    results_csv,
    run_sweep,
    select_best_T,
    summarize_run,
    trajectory_csv,
)
from tadlora.model import task_summary
from tadlora.numerics import RngStream
from tadlora.protocol import estimate_phi, run_training
from tadlora.topology import MixingPolicy, build_base_graph, spectral_gap_report

RHO_COLUMNS = ("p", "lambda2", "rho_sq_hat", "stderr", "one_minus_rho")


def _load_grid(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text, env_seed=os.environ.get("TADLORA_SEED"))


def _cmd_run(args) -> int:
    grid = _load_grid(args.config)
    out = Path(args.out or grid.output_dir or "tadlora-run")
    result = run_training(grid.base)
    row = summarize_run(result, grid.late_window_frac)
    atomic_write(out / "trajectory.csv", trajectory_csv(result.records))
    atomic_write(out / "result.csv", results_csv([row]))
    atomic_write(out / "resolved_config.json",
                 json.dumps(emit_config(grid), indent=2, sort_keys=True) + "\n")
    from tadlora.model import generate_tasks  # local import keeps CLI start fast

    ts = generate_tasks(grid.base.dims, grid.base.m, grid.base.profile(),
                        grid.base.n_per_client, RngStream(grid.base.root_seed))
    atomic_write(out / "tasks.json",
                 json.dumps(task_summary(ts, grid.base.dims, grid.base.root_seed),
                            indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'trajectory.csv'} and {out / 'result.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    grid = _load_grid(args.config)
    out = Path(args.out or grid.output_dir or "tadlora-sweep")
    atomic_write(out / "resolved_config.json",
                 json.dumps(emit_config(grid), indent=2, sort_keys=True) + "\n")
    outcome = run_sweep(grid, out, jobs=args.jobs)
    print(f"{len(outcome.rows)} cells completed, {len(outcome.failures)} failed; "
          f"results in {out / 'results.csv'}")
    for f in outcome.failures:
        print(f"FAILED {f.method} p={f.p} T={f.T} seed={f.seed}: {f.error}",
              file=sys.stderr)
    return 1 if outcome.failures else 0


def _cmd_best_t(args) -> int:
    per_file: list[dict[tuple[str, float], int]] = []
    for path in args.results:
        rows = parse_results_csv(Path(path).read_text(encoding="utf-8"))
        per_file.append(select_best_T(rows, args.metric))
    keys = sorted({k for best in per_file for k in best})
    print("method,p,best_T_per_input,median,mean")
    for method, p in keys:
        values = [best[(method, p)] for best in per_file if (method, p) in best]
        median, mean = aggregate_median_T(values)
        joined = ";".join(str(v) for v in values)
        print(f"{method},{fmt(p)},{joined},{fmt(median)},{fmt(mean)}")
    return 0


def _cmd_rho_report(args) -> int:
    graph = build_base_graph(args.graph, args.m)
    policy = MixingPolicy(kind=args.policy, alpha=args.alpha)
    p_list = [float(p) for p in args.p.split(",") if p.strip()]
    report = spectral_gap_report(graph, policy, p_list, args.samples,
                                 RngStream(args.seed).child("rho-report"))
    lines = [",".join(RHO_COLUMNS)]
    for row in report.rows:
        lines.append(",".join([
            fmt(row.p), fmt(row.lambda2), fmt(row.rho_sq_hat),
            fmt(row.stderr), fmt(row.one_minus_rho),
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    print(f"fitted gap constant c = {fmt(report.c_fit)}", file=sys.stderr)
    return 0


def _cmd_phi(args) -> int:
    grid = _load_grid(args.config)
    t_values = [int(t) for t in args.t_list.split(",") if t.strip()]
    if not t_values:
        raise InvalidConfigError("--t-list must contain at least one interval")
    print("T,phi,tol,f_end_T,f_end_1,rounds_T,rounds_1")
    for t in t_values:
        est = estimate_phi(grid.base, t, convergence_tol=args.tol)
        print(",".join([
            str(est.T), fmt(est.phi), fmt(est.tol), fmt(est.f_end_T),
            fmt(est.f_end_1), str(est.rounds_T), str(est.rounds_1),
        ]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tadlora",
        description="Decentralized alternating low-rank adaptation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single training cell")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the full experiment grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_best = sub.add_parser("best-t", help="select best switching intervals")
    p_best.add_argument("--results", required=True, nargs="+")
    p_best.add_argument("--metric", default="final_mean_client_loss",
                        choices=SELECTION_METRICS)
    p_best.set_defaults(func=_cmd_best_t)

    p_rho = sub.add_parser("rho-report", help="spectral-gap diagnostics CSV")
    p_rho.add_argument("--graph", required=True, choices=("complete", "ring"))
    p_rho.add_argument("--m", required=True, type=int)
    p_rho.add_argument("--p", required=True, help="comma-separated probabilities")
    p_rho.add_argument("--samples", type=int, default=1000)
    p_rho.add_argument("--seed", type=int, default=0)
    p_rho.add_argument("--policy", default="laplacian_step",
                       choices=("laplacian_step", "pairwise_gossip"))
    p_rho.add_argument("--alpha", type=float, default=None)
    p_rho.add_argument("--out", default=None)
    p_rho.set_defaults(func=_cmd_rho_report)

    p_phi = sub.add_parser("phi", help="alternation-bias estimates")
    p_phi.add_argument("--config", required=True)
    p_phi.add_argument("--t-list", required=True)
    p_phi.add_argument("--tol", type=float, default=1e-9)
    p_phi.set_defaults(func=_cmd_phi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TadLoraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
