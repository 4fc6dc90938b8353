"""Depth completion from sparse samples and a guide image."""

from ._sparsefill import (
    Completion,
    MetricsReport,
    SolveReport,
    __version__,
    complete,
    complete_superres,
    evaluate,
    load_depth,
    positional_encoding,
    sample_sparse,
    save_depth,
    solve_irls,
    solve_lse_normal,
    solve_lse_svd,
    synthetic_scene,
)

__all__ = [
    "Completion",
    "MetricsReport",
    "SolveReport",
    "complete",
    "complete_superres",
    "evaluate",
    "load_depth",
    "positional_encoding",
    "sample_sparse",
    "save_depth",
    "solve_irls",
    "solve_lse_normal",
    "solve_lse_svd",
    "synthetic_scene",
]
