"""Reader for the simulator's published results CSV.

This package consumes the sweep CSV contract only; it never imports the
simulator. The nine-column schema is fixed; the extended variant appends
final_mean_global_loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

RESULT_COLUMNS = (
    "method", "p", "T", "seed",
    "final_mean_client_loss", "final_F_avg",
    "min_running_avg_grad_norm", "mean_late_cross_norm", "rho_hat",
)
EXTENDED_RESULT_COLUMNS = RESULT_COLUMNS + ("final_mean_global_loss",)
METRIC_COLUMNS = (
    "final_mean_client_loss", "final_F_avg", "min_running_avg_grad_norm",
    "mean_late_cross_norm", "rho_hat", "final_mean_global_loss",
)


class ResultsError(ValueError):
    """Malformed results CSV or an empty selection."""


@dataclass(frozen=True)
class Row:
    method: str
    p: float
    T: int
    seed: int
    values: dict[str, float]

    def get(self, column: str) -> float:
        if column not in self.values:
            raise ResultsError(f"column {column!r} not present in the results CSV")
        return self.values[column]


def load_results(path: str | Path) -> list[Row]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ResultsError(f"{path}: empty file")
    header = lines[0].split(",")
    if tuple(header) not in (RESULT_COLUMNS, EXTENDED_RESULT_COLUMNS):
        raise ResultsError(
            f"{path}: header does not match the published results schema "
            f"({','.join(RESULT_COLUMNS)})"
        )
    metric_names = header[4:]
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ResultsError(f"{path}: malformed row {ln!r}")
        rows.append(
            Row(
                method=parts[0],
                p=float(parts[1]),
                T=int(parts[2]),
                seed=int(parts[3]),
                values={name: float(v) for name, v in zip(metric_names, parts[4:])},
            )
        )
    return rows


def apply_filters(rows: Iterable[Row], filters: dict[str, str]) -> list[Row]:
    out = list(rows)
    for key, value in filters.items():
        if key == "method":
            out = [r for r in out if r.method == value]
        elif key == "p":
            out = [r for r in out if r.p == float(value)]
        elif key == "T":
            out = [r for r in out if r.T == int(value)]
        elif key == "seed":
            out = [r for r in out if r.seed == int(value)]
        else:
            raise ResultsError(f"unknown filter key {key!r} (use method, p, T, seed)")
    if not out:
        raise ResultsError(f"no rows left after applying filters {filters}")
    return out
