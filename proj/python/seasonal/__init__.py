"""Seasonal track discovery from listening logs."""

from ._core import (
    GmmConfig,
    GmmModel,
    InitMethod,
    SeasonalError,
    aggregate_lines,
    auc_from_scores,
    compute_rates,
    fit,
    label_track,
    log_gaussian,
    log_sum_exp,
    normalize_text,
    parse_record,
    roc_curve,
    run_cli,
    window_days,
)

__all__ = [
    "GmmConfig",
    "GmmModel",
    "InitMethod",
    "SeasonalError",
    "aggregate_lines",
    "auc_from_scores",
    "compute_rates",
    "fit",
    "label_track",
    "log_gaussian",
    "log_sum_exp",
    "normalize_text",
    "parse_record",
    "roc_curve",
    "run_cli",
    "window_days",
]
