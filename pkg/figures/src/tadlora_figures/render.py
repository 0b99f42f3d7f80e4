"""Deterministic figure rendering from sweep results CSVs.

Four figure kinds:

    metric_vs_p    per-method metric curves over activation probability
                   (hindsight-best T per (method, p), mean +/- std over seeds)
    gain_heatmap   (p, T) heatmap of baseline-minus-method metric, diverging
                   scale centered at zero (positive = method better)
    median_t_trend per-seed best interval scatter with the seed-median trend
    cross_decay    log-log late-window cross-term norm against the interval

Rendering is a pure function of the input CSV: fixed figure geometry, fixed
SVG hash salt, no timestamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean, median, stdev

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import TwoSlopeNorm  # noqa: E402

from tadlora_figures.results import ResultsError, Row, apply_filters, load_results

FIGURE_KINDS = ("metric_vs_p", "gain_heatmap", "median_t_trend", "cross_decay")

plt.rcParams["svg.hashsalt"] = "tadlora-figures"
plt.rcParams["figure.figsize"] = (6.0, 4.0)


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    figure_kind: str
    output_path: str
    metric: str = "final_mean_client_loss"
    method: str = "tad_lora"
    baseline: str = "vanilla_lora"
    filters: dict = field(default_factory=dict)
    log_x: bool = True
    title: str | None = None

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ResultsError(
                f"unknown figure kind {self.figure_kind!r}; expected one of {FIGURE_KINDS}"
            )


def _seed_stats(rows: list[Row], metric: str) -> tuple[float, float]:
    vals = [r.get(metric) for r in rows]
    return fmean(vals), (stdev(vals) if len(vals) > 1 else 0.0)


def _best_t_cells(rows: list[Row], metric: str) -> dict[tuple[str, float], list[Row]]:
    """Per (method, p): the rows of the seed-mean-best T (hindsight tuning)."""
    grouped: dict[tuple[str, float, int], list[Row]] = {}
    for r in rows:
        grouped.setdefault((r.method, r.p, r.T), []).append(r)
    best: dict[tuple[str, float], list[Row]] = {}
    for (method, p, t), cell in sorted(grouped.items()):
        key = (method, p)
        mean = fmean(r.get(metric) for r in cell)
        if key not in best or mean < fmean(r.get(metric) for r in best[key]):
            best[key] = cell
    return best


def compute_gain_matrix(
    rows: list[Row], metric: str, method: str, baseline: str
) -> tuple[list[float], list[int], list[list[float]]]:
    """Gain grid: seed-mean baseline metric minus seed-mean method metric per
    (p, T). With loss metrics, positive means the method is better."""
    method_rows = [r for r in rows if r.method == method]
    base_rows = [r for r in rows if r.method == baseline]
    if not method_rows:
        raise ResultsError(f"no rows for method {method!r}")
    if not base_rows:
        raise ResultsError(f"no rows for baseline {baseline!r}")
    p_values = sorted({r.p for r in method_rows}, reverse=True)
    t_values = sorted({r.T for r in method_rows})
    base_by_p: dict[float, list[float]] = {}
    for r in base_rows:
        base_by_p.setdefault(r.p, []).append(r.get(metric))
    grid = []
    for p in p_values:
        if p not in base_by_p:
            raise ResultsError(f"baseline {baseline!r} has no rows at p={p}")
        base_mean = fmean(base_by_p[p])
        row_vals = []
        for t in t_values:
            cell = [r.get(metric) for r in method_rows if r.p == p and r.T == t]
            if not cell:
                raise ResultsError(f"method {method!r} missing cell p={p}, T={t}")
            row_vals.append(base_mean - fmean(cell))
        grid.append(row_vals)
    return p_values, t_values, grid


def render(spec: FigureSpec) -> Path:
    rows = load_results(spec.input_csv)
    if spec.filters:
        rows = apply_filters(rows, spec.filters)

    fig, ax = plt.subplots()
    if spec.figure_kind == "metric_vs_p":
        _metric_vs_p(ax, rows, spec)
    elif spec.figure_kind == "gain_heatmap":
        _gain_heatmap(fig, ax, rows, spec)
    elif spec.figure_kind == "median_t_trend":
        _median_t_trend(ax, rows, spec)
    else:
        _cross_decay(ax, rows, spec)

    if spec.title:
        ax.set_title(spec.title)
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=_clean_metadata(out.suffix))
    plt.close(fig)
    return out


def _clean_metadata(suffix: str) -> dict:
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return {}


def _metric_vs_p(ax, rows, spec):
    best = _best_t_cells(rows, spec.metric)
    methods = sorted({method for method, _ in best})
    for m in methods:
        points = sorted((p, *_seed_stats(cell, spec.metric))
                        for (method, p), cell in best.items() if method == m)
        ps = [p for p, _, _ in points]
        means = [v for _, v, _ in points]
        errs = [e for _, _, e in points]
        ax.errorbar(ps, means, yerr=errs, marker="o", capsize=3, label=m)
    if spec.log_x:
        ax.set_xscale("log")
    ax.invert_xaxis()  # communication weakens to the right
    ax.set_xlabel("edge activation probability p")
    ax.set_ylabel(spec.metric)
    ax.legend()


def _gain_heatmap(fig, ax, rows, spec):
    p_values, t_values, grid = compute_gain_matrix(
        rows, spec.metric, spec.method, spec.baseline
    )
    flat = [v for row in grid for v in row]
    span = max(max(abs(v) for v in flat), 1e-12)
    norm = TwoSlopeNorm(vmin=-span, vcenter=0.0, vmax=span)
    im = ax.imshow(grid, cmap="RdBu_r", norm=norm, aspect="auto")
    ax.set_xticks(range(len(t_values)), [str(t) for t in t_values])
    ax.set_yticks(range(len(p_values)), [f"{p:g}" for p in p_values])
    ax.set_xlabel("switching interval T")
    ax.set_ylabel("edge activation probability p")
    fig.colorbar(im, ax=ax, label=f"{spec.baseline} - {spec.method} ({spec.metric})")


def _median_t_trend(ax, rows, spec):
    method_rows = [r for r in rows if r.method == spec.method]
    if not method_rows:
        raise ResultsError(f"no rows for method {spec.method!r}")
    p_values = sorted({r.p for r in method_rows}, reverse=True)
    seeds = sorted({r.seed for r in method_rows})
    per_seed = {s: [] for s in seeds}
    medians = []
    for p in p_values:
        bests = []
        for s in seeds:
            cells = {r.T: r.get(spec.metric) for r in method_rows if r.p == p and r.seed == s}
            if not cells:
                raise ResultsError(f"method {spec.method!r} missing p={p}, seed={s}")
            best_t = min(sorted(cells), key=lambda t: cells[t])
            bests.append(best_t)
            per_seed[s].append(best_t)
        medians.append(median(bests))
    for s in seeds:
        ax.plot(p_values, per_seed[s], linestyle="--", linewidth=0.6, alpha=0.4)
    ax.plot(p_values, medians, marker="o", linewidth=2.2, color="black", label="median")
    if spec.log_x:
        ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("edge activation probability p")
    ax.set_ylabel("selected switching interval")
    ax.legend()


def _cross_decay(ax, rows, spec):
    method_rows = [r for r in rows if r.method == spec.method]
    if not method_rows:
        raise ResultsError(f"no rows for method {spec.method!r}")
    p_values = sorted({r.p for r in method_rows}, reverse=True)
    for p in p_values:
        cells: dict[int, list[float]] = {}
        for r in method_rows:
            if r.p == p:
                cells.setdefault(r.T, []).append(r.get("mean_late_cross_norm"))
        ts = sorted(cells)
        means = [fmean(cells[t]) for t in ts]
        if any(v <= 0 for v in means):
            # log axes cannot show exact zeros; clip at a visible floor
            means = [max(v, 1e-16) for v in means]
        ax.plot(ts, means, marker="o", label=f"p={p:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("switching interval T")
    ax.set_ylabel("late-window cycle-mean cross norm")
    ax.legend()
