"""Random convolutional kernel transform with a grid-parallel engine."""

from .data import Dataset, ParseError, parse_csv, parse_ts, synth_random, synth_two_class
from .engine import (
    CapacityError,
    CellAccumulator,
    EnginePlan,
    GridLimits,
    plan_batches,
    plan_shards,
    reduce_cell,
    transform,
    transform_sharded,
    transform_with_stats,
)
from .features import FeatureMatrix
from .kernels import (
    GenOptions,
    KernelBank,
    dilation_exponent_bound,
    generate_bank,
    sample_channels,
    sample_dilation,
    sample_padding,
)
from .reference import (
    FeatureTriple,
    apply_kernel,
    convolve,
    dot_at,
    output_length,
    transform_reference,
)
from .ridge import RidgeModel, fit, fit_regression, predict, predict_values, select_alpha

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CellAccumulator",
    "Dataset",
    "EnginePlan",
    "FeatureMatrix",
    "FeatureTriple",
    "GenOptions",
    "GridLimits",
    "KernelBank",
    "ParseError",
    "RidgeModel",
    "apply_kernel",
    "convolve",
    "dilation_exponent_bound",
    "dot_at",
    "fit",
    "fit_regression",
    "generate_bank",
    "output_length",
    "parse_csv",
    "parse_ts",
    "plan_batches",
    "plan_shards",
    "predict",
    "predict_values",
    "reduce_cell",
    "sample_channels",
    "sample_dilation",
    "sample_padding",
    "select_alpha",
    "synth_random",
    "synth_two_class",
    "transform",
    "transform_reference",
    "transform_sharded",
    "transform_with_stats",
    "__version__",
]
