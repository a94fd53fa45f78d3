"""Adaptive frequency estimation with periodic discount, a range coder around
it, and tools for measuring its redundancy against piecewise stationary
competitors."""

from .estimator import (
    CategoricalDist,
    DerivedParams,
    InvalidParams,
    RescaleInPrefix,
    RfdModel,
    RfdParams,
    RfdState,
    closed_form_predict,
    code_length,
    init_state,
    predict,
    rescale_partition,
    run_trace,
    update,
    validate_params,
)

__version__ = "0.1.0"
