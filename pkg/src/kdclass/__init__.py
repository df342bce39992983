"""Kernel density classification with per-query adaptive bandwidths.

Each class is modeled by a product-Gaussian kernel density whose bandwidths
are re-selected for every query by greedy coordinate-wise shrinking; the
final bandwidth profiles double as a class-specific relevant-variable
signal, which in turn drives a per-class training-size planner. The package
also ships the synthetic benchmark generators and a deterministic
replication harness.
"""

from ._backend import backend_name
from .bandwidths import (
    LocalBandwidths,
    ShrinkParams,
    bandwidth_matrix,
    initial_bandwidth,
    local_bandwidths,
)
from .classify import (
    FitModel,
    Prediction,
    fit,
    load_model,
    predict,
    predict_batch,
    save_model,
)
from .data import LabeledDataset, read_csv, read_features, write_csv
from .datagen import (
    Example2Config,
    add_noise_columns,
    example1,
    example1_relevant,
    example2,
    example2_relevant,
    substream,
)
from .density import (
    KernelConstants,
    bandwidth_derivative,
    gaussian_kernel,
    kernel_constants,
    log_class_density,
    second_partial,
)
from .harness import (
    ExperimentConfig,
    ReplicationReport,
    bandwidth_zscores,
    confusion_metrics,
    run_replications,
)
from .planning import SizePlan, estimate_b, plan_sizes, two_stage
from .selection import SelectionResult, select_relevant
from .statdist import (
    f_cdf,
    f_upper_quantile,
    studentized_range_cdf,
    studentized_range_upper_quantile,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "LocalBandwidths",
    "ShrinkParams",
    "bandwidth_matrix",
    "initial_bandwidth",
    "local_bandwidths",
    "FitModel",
    "Prediction",
    "fit",
    "predict",
    "predict_batch",
    "save_model",
    "load_model",
    "LabeledDataset",
    "read_csv",
    "read_features",
    "write_csv",
    "Example2Config",
    "substream",
    "example1",
    "example1_relevant",
    "example2",
    "example2_relevant",
    "add_noise_columns",
    "KernelConstants",
    "gaussian_kernel",
    "kernel_constants",
    "log_class_density",
    "bandwidth_derivative",
    "second_partial",
    "ExperimentConfig",
    "ReplicationReport",
    "confusion_metrics",
    "bandwidth_zscores",
    "run_replications",
    "SizePlan",
    "estimate_b",
    "plan_sizes",
    "two_stage",
    "SelectionResult",
    "select_relevant",
    "f_cdf",
    "f_upper_quantile",
    "studentized_range_cdf",
    "studentized_range_upper_quantile",
]
