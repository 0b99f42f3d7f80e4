"""Experiment harness: config parsing, sweeps, selection, CLI."""

from tadlora.harness.config import DEFAULT_P_LIST, DEFAULT_T_LIST, ExperimentGrid, emit_config, parse_config
from tadlora.harness.sweep import (
    RESULT_COLUMNS,
    ResultRow,
    SweepOutcome,
    aggregate_median_T,
    parse_results_csv,
    results_csv,
    run_sweep,
    select_best_T,
    summarize_run,
    trajectory_csv,
)

__all__ = [
    "DEFAULT_P_LIST",
    "DEFAULT_T_LIST",
    "ExperimentGrid",
    "emit_config",
    "parse_config",
    "RESULT_COLUMNS",
    "ResultRow",
    "SweepOutcome",
    "aggregate_median_T",
    "parse_results_csv",
    "results_csv",
    "run_sweep",
    "select_best_T",
    "summarize_run",
    "trajectory_csv",
]
