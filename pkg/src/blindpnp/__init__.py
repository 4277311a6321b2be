"""Blind plug-and-play image restoration in numpy.

Half-quadratic splitting alternates a closed-form FFT data step with a
pluggable Gaussian denoiser, re-estimating the noise level of every iterate
so the observation noise never has to be supplied.
"""

from .curvature import gaussian_curvature, image_gradients
from .degradation import (
    DegradationSpec,
    add_gaussian_noise,
    convolve_circular,
    degrade,
    delta_kernel,
    load_kernel,
    make_bicubic_kernel,
    make_gaussian_kernel,
    save_kernel,
)
from .denoisers import Denoiser, blind_denoise, default_rho, denoise, tv_denoise
from .image import as_image, load_image, quantize, rgb_to_y, save_image, upsample_bicubic
from .metrics import MetricReport, evaluate, psnr, psnr_y, relative_change, ssim
from .noise import NoiseEstimate, NoiseEstimator, estimate_sigma_mad
from .pnp import PnPConfig, RestoreResult, TraceRow, run_restore
from .samples import center_crop, sample_image, shipped_kernel
from .spectral import FidelityWeights, deblur_x_step, psf_to_otf, sisr_x_step

__version__ = "0.1.0"

__all__ = [
    "DegradationSpec",
    "Denoiser",
    "FidelityWeights",
    "MetricReport",
    "NoiseEstimate",
    "NoiseEstimator",
    "PnPConfig",
    "RestoreResult",
    "TraceRow",
    "add_gaussian_noise",
    "as_image",
    "blind_denoise",
    "center_crop",
    "convolve_circular",
    "deblur_x_step",
    "default_rho",
    "degrade",
    "delta_kernel",
    "denoise",
    "estimate_sigma_mad",
    "evaluate",
    "gaussian_curvature",
    "image_gradients",
    "load_image",
    "load_kernel",
    "make_bicubic_kernel",
    "make_gaussian_kernel",
    "psf_to_otf",
    "psnr",
    "psnr_y",
    "quantize",
    "relative_change",
    "rgb_to_y",
    "run_restore",
    "sample_image",
    "save_image",
    "save_kernel",
    "shipped_kernel",
    "sisr_x_step",
    "ssim",
    "tv_denoise",
    "upsample_bicubic",
]
