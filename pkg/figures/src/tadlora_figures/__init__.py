"""Figure generation for decentralized alternating LoRA sweep results."""

from tadlora_figures.render import FIGURE_KINDS, FigureSpec, compute_gain_matrix, render
from tadlora_figures.results import Row, ResultsError, apply_filters, load_results

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "compute_gain_matrix",
    "render",
    "Row",
    "ResultsError",
    "apply_filters",
    "load_results",
]
