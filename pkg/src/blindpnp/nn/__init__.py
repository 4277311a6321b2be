"""Forward-only numpy executor for the curvature-aware U-Net estimator and denoiser."""

from .graph import (
    SMALL_WIDTHS,
    FULL_WIDTHS,
    Layer,
    NetGraph,
    build_cunet_denoiser,
    build_cunet_estimator,
    convnext_block,
    count_params_closed_form,
    csam,
    run_on_image,
)
from .ops import conv2d, conv_transpose2x2, relu, sigmoid
from .weights import WeightStore, load_weights, read_graph, save_weights

__all__ = [
    "SMALL_WIDTHS",
    "FULL_WIDTHS",
    "Layer",
    "NetGraph",
    "WeightStore",
    "build_cunet_denoiser",
    "build_cunet_estimator",
    "conv2d",
    "conv_transpose2x2",
    "convnext_block",
    "count_params_closed_form",
    "csam",
    "load_weights",
    "read_graph",
    "relu",
    "run_on_image",
    "save_weights",
    "sigmoid",
]
