"""Python bindings for the online SPICE regression library."""

from ._core import (
    DataError,
    FeatureMap,
    NumericalError,
    SpiceModel,
    SufficientStats,
    best_subset_support,
    calibrate,
    conformal_rank,
    divergence,
    lasso_fit,
    objective,
    reference_spice,
    ridge_fit,
    run_experiment,
    sample_sparse_student_t,
    split_indices,
)

__all__ = [
    "DataError",
    "FeatureMap",
    "NumericalError",
    "SpiceModel",
    "SufficientStats",
    "best_subset_support",
    "calibrate",
    "conformal_rank",
    "divergence",
    "lasso_fit",
    "objective",
    "reference_spice",
    "ridge_fit",
    "run_experiment",
    "sample_sparse_student_t",
    "split_indices",
]
