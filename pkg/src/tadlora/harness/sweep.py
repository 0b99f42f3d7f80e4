"""Grid execution, result persistence, and switching-interval selection.

CSV conventions are fixed for reproducibility: comma separator, '.' decimal,
LF line endings, values printed with 17 significant digits, and atomic
write-temp-then-rename file creation so concurrent cells never interleave.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from tadlora.errors import InvalidInputError
from tadlora.harness.config import ExperimentGrid
from tadlora.metrics import RoundRecord, late_window
from tadlora.protocol import Method, RunResult, run_training

RESULT_COLUMNS = (
    "method", "p", "T", "seed",
    "final_mean_client_loss", "final_F_avg",
    "min_running_avg_grad_norm", "mean_late_cross_norm", "rho_hat",
)
# results_extended.csv appends the shared-evaluation analog; results.csv
# keeps the nine-column schema above byte for byte.
EXTENDED_RESULT_COLUMNS = RESULT_COLUMNS + ("final_mean_global_loss",)
TRAJECTORY_COLUMNS = (
    "round", "phase", "delta_A_sq", "delta_B_sq", "cross_norm",
    "decomposition_residual", "bound_slack", "F_avg_model",
    "grad_norm_sq", "mean_client_loss", "mean_global_loss", "rho_realized",
)
SELECTION_METRICS = ("final_mean_client_loss", "final_F_avg", "final_mean_global_loss")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ResultRow:
    method: str
    p: float
    T: int
    seed: int
    final_mean_client_loss: float
    final_F_avg: float
    min_running_avg_grad_norm: float
    mean_late_cross_norm: float
    rho_hat: float
    final_mean_global_loss: float = float("nan")

    def to_csv(self, extended: bool = False) -> str:
        cols = [
            self.method, fmt(self.p), str(self.T), str(self.seed),
            fmt(self.final_mean_client_loss), fmt(self.final_F_avg),
            fmt(self.min_running_avg_grad_norm), fmt(self.mean_late_cross_norm),
            fmt(self.rho_hat),
        ]
        if extended:
            cols.append(fmt(self.final_mean_global_loss))
        return ",".join(cols)


class CellFailure(NamedTuple):
    method: str
    p: float
    T: int
    seed: int
    error: str


@dataclass(frozen=True)
class SweepOutcome:
    rows: list[ResultRow]
    failures: list[CellFailure]


def min_running_average(values: Sequence[float]) -> float:
    """Minimum over t of the prefix mean of values[:t+1]."""
    if not values:
        raise InvalidInputError("need at least one value")
    best = math.inf
    total = 0.0
    for k, v in enumerate(values, start=1):
        total += v
        best = min(best, total / k)
    return best


def summarize_run(result: RunResult, late_frac: float = 0.4) -> ResultRow:
    recs = result.records
    last = recs[-1]
    late = late_window(recs, result.config.R, late_frac) or [last]
    mean_sq_rho = sum(r.rho_realized ** 2 for r in recs) / len(recs)
    return ResultRow(
        method=result.config.method.value,
        p=result.config.topology.resolved_p(),
        T=result.config.T,
        seed=result.config.root_seed,
        final_mean_client_loss=last.mean_client_loss,
        final_F_avg=last.F_avg_model,
        min_running_avg_grad_norm=min_running_average([r.grad_norm_sq for r in recs]),
        mean_late_cross_norm=sum(r.snapshot.cross_norm for r in late) / len(late),
        rho_hat=math.sqrt(mean_sq_rho),
        final_mean_global_loss=last.mean_global_loss,
    )


def trajectory_csv(records: Iterable[RoundRecord]) -> str:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for r in records:
        s = r.snapshot
        lines.append(",".join([
            str(r.round), r.phase.value,
            fmt(s.delta_A_sq), fmt(s.delta_B_sq), fmt(s.cross_norm),
            fmt(s.decomposition_residual), fmt(s.bound_slack),
            fmt(r.F_avg_model), fmt(r.grad_norm_sq), fmt(r.mean_client_loss),
            fmt(r.mean_global_loss), fmt(r.rho_realized),
        ]))
    return "\n".join(lines) + "\n"


def results_csv(rows: Iterable[ResultRow], extended: bool = False) -> str:
    columns = EXTENDED_RESULT_COLUMNS if extended else RESULT_COLUMNS
    lines = [",".join(columns)]
    lines.extend(r.to_csv(extended=extended) for r in rows)
    return "\n".join(lines) + "\n"


def parse_results_csv(text: str) -> list[ResultRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    extended_header = ",".join(EXTENDED_RESULT_COLUMNS)
    plain_header = ",".join(RESULT_COLUMNS)
    if not lines or lines[0] not in (plain_header, extended_header):
        raise InvalidInputError(
            f"results CSV header mismatch; expected {plain_header!r}"
        )
    extended = lines[0] == extended_header
    width = len(EXTENDED_RESULT_COLUMNS) if extended else len(RESULT_COLUMNS)
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != width:
            raise InvalidInputError(f"malformed results row: {ln!r}")
        rows.append(ResultRow(
            method=parts[0], p=float(parts[1]), T=int(parts[2]), seed=int(parts[3]),
            final_mean_client_loss=float(parts[4]), final_F_avg=float(parts[5]),
            min_running_avg_grad_norm=float(parts[6]),
            mean_late_cross_norm=float(parts[7]), rho_hat=float(parts[8]),
            final_mean_global_loss=float(parts[9]) if extended else float("nan"),
        ))
    return rows


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def cell_name(method: str, p: float, t: int, seed: int) -> str:
    return f"{method}_p{p:g}_T{t}_seed{seed}"


def _execute_cell(args: tuple) -> tuple:
    grid, method, p, t, seed, late_frac = args
    cfg = grid.cell_config(method, p, t, seed)
    result = run_training(cfg)
    return summarize_run(result, late_frac), trajectory_csv(result.records)


def run_sweep(grid: ExperimentGrid, out_dir: str | Path, jobs: int = 1) -> SweepOutcome:
    """Execute every (method, p, T, seed) cell; cells are independent and
    order-insensitive, failures are recorded per cell without stopping."""
    out = Path(out_dir)
    traj_dir = out / "trajectories"
    cells = grid.cells()
    args = [(grid, m, p, t, s, grid.late_window_frac) for (m, p, t, s) in cells]

    rows: list[ResultRow] = []
    failures: list[CellFailure] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = []
            for a in args:
                outcomes.append(pool.submit(_execute_cell, a))
            for (method, p, t, seed), fut in zip(cells, outcomes):
                try:
                    row, traj = fut.result()
                    rows.append(row)
                    atomic_write(traj_dir / f"{cell_name(method.value, p, t, seed)}.csv", traj)
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    failures.append(CellFailure(method.value, p, t, seed, repr(exc)))
    else:
        for (method, p, t, seed), a in zip(cells, args):
            try:
                row, traj = _execute_cell(a)
                rows.append(row)
                atomic_write(traj_dir / f"{cell_name(method.value, p, t, seed)}.csv", traj)
            except Exception as exc:  # noqa: BLE001 - cell isolation
                failures.append(CellFailure(method.value, p, t, seed, repr(exc)))

    atomic_write(out / "results.csv", results_csv(rows))
    atomic_write(out / "results_extended.csv", results_csv(rows, extended=True))
    atomic_write(out / "results_summary.csv", summary_csv(rows))
    if failures:
        lines = ["method,p,T,seed,error"]
        lines.extend(
            f"{f.method},{fmt(f.p)},{f.T},{f.seed},{f.error!r}" for f in failures
        )
        atomic_write(out / "failures.csv", "\n".join(lines) + "\n")
    return SweepOutcome(rows=rows, failures=failures)


def summary_csv(rows: Sequence[ResultRow]) -> str:
    """Per-(method, p, T) mean and standard deviation across seeds."""
    header = [
        "method", "p", "T", "n_seeds",
        "mean_final_mean_client_loss", "std_final_mean_client_loss",
        "mean_final_F_avg", "std_final_F_avg",
        "mean_min_running_avg_grad_norm", "std_min_running_avg_grad_norm",
        "mean_mean_late_cross_norm", "std_mean_late_cross_norm",
    ]
    groups: dict[tuple[str, float, int], list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.p, r.T), []).append(r)
    lines = [",".join(header)]
    for (method, p, t), grp in sorted(groups.items()):
        cols = [method, fmt(p), str(t), str(len(grp))]
        for attr in ("final_mean_client_loss", "final_F_avg",
                     "min_running_avg_grad_norm", "mean_late_cross_norm"):
            vals = [getattr(r, attr) for r in grp]
            cols.append(fmt(statistics.fmean(vals)))
            cols.append(fmt(statistics.stdev(vals) if len(vals) > 1 else 0.0))
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def select_best_T(rows: Sequence[ResultRow], metric: str = "final_mean_client_loss") -> dict[tuple[str, float], int]:
    """Per (method, p): the T minimizing the seed-mean metric, ties to smaller T.

    Minimizing a loss matches maximizing any score that is a strictly
    decreasing transform of it, so the selection is transform-invariant.
    """
    if metric not in SELECTION_METRICS:
        raise InvalidInputError(f"metric {metric!r} not one of {SELECTION_METRICS}")
    per_method_ts: dict[str, set[int]] = {}
    for r in rows:
        per_method_ts.setdefault(r.method, set()).add(r.T)
    cells: dict[tuple[str, float], dict[int, list[float]]] = {}
    for r in rows:
        cells.setdefault((r.method, r.p), {}).setdefault(r.T, []).append(getattr(r, metric))
    missing = []
    for (method, p), by_t in sorted(cells.items()):
        for t in sorted(per_method_ts[method]):
            if t not in by_t:
                missing.append((method, p, t))
    if missing:
        raise InvalidInputError(
            "missing sweep cells (method, p, T): " + ", ".join(map(str, missing))
        )
    best: dict[tuple[str, float], int] = {}
    for (method, p), by_t in cells.items():
        chosen, chosen_mean = None, math.inf
        for t in sorted(by_t):
            mean = statistics.fmean(by_t[t])
            if mean < chosen_mean:
                chosen, chosen_mean = t, mean
        best[(method, p)] = chosen
    return best


def aggregate_median_T(per_task_best: Sequence[float]) -> tuple[float, float]:
    """(median, mean) of a collection of selected switching intervals.

    Median uses midpoint averaging for even-length input.
    """
    if not per_task_best:
        raise InvalidInputError("cannot aggregate an empty list of intervals")
    vals = sorted(float(v) for v in per_task_best)
    n = len(vals)
    if n % 2 == 1:
        median = vals[n // 2]
    else:
        median = (vals[n // 2 - 1] + vals[n // 2]) / 2.0
    return median, sum(vals) / n
