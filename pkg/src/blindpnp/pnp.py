"""Blind plug-and-play restoration by half-quadratic splitting.

Each iteration ``k = 0 .. K-1``:

1. ``x`` step: closed-form solve of the quadratic data term against ``v``,
   weighted by the observation noise ``sigma_s`` and the current level
   ``sigma_k`` (deblur / SISR via FFT, denoise as a convex combination).
2. ``sigma`` step: ``sigma_{k+1}`` re-estimated from ``x_{k+1}``.
3. curvature of ``x_{k+1}``.
4. ``v`` step: ``v_{k+1} = D(x_{k+1}, rho * sigma_{k+1}, curvature)``.

Start: ``sigma_s`` estimated from ``y`` (unless given), ``sigma_0 = 50``,
``v_0 = y`` (bicubic-upsampled ``y`` for SISR).
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .curvature import gaussian_curvature
from .degradation import DegradationSpec
from .denoisers import Denoiser, default_rho
from .image import as_image, upsample_bicubic
from .metrics import psnr, relative_change
from .noise import NoiseEstimator, clamp_sigma
from .spectral import (
    FidelityWeights,
    deblur_x_step,
    denoise_x_step,
    psf_to_otf,
    sisr_x_step,
)

__all__ = [
    "STOP_MODES",
    "PnPConfig",
    "PnPState",
    "TraceRow",
    "RestoreResult",
    "record_trace",
    "run_restore",
    "trace_to_rows",
]

log = logging.getLogger(__name__)

STOP_MODES = ("rel_change", "psnr_oracle", "none")


@dataclasses.dataclass(frozen=True)
class PnPConfig:
    """Iteration parameters.

    ``rho=None`` takes the denoiser handle's value, or the task default when
    the handle has none. ``sigma_s`` set to a number switches to non-blind
    mode. ``stop_mode="none"`` always runs ``max_iters`` iterations.
    """

    lam: float = 0.37
    rho: float | None = None
    max_iters: int = 15
    stop_mode: str = "rel_change"
    rel_tol: float = 1e-4
    sigma0: float = 50.0
    sigma_s: float | None = None
    trace: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_mode not in STOP_MODES:
            raise ValueError(f"stop_mode must be one of {STOP_MODES}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be > 0")
        if self.sigma_s is not None and not self.sigma_s > 0:
            raise ValueError("sigma_s override must be > 0")


@dataclasses.dataclass(frozen=True)
class TraceRow:
    k: int
    rel_err_x: float
    rel_err_v: float
    sigma_k: float
    psnr_v: float | None = None


@dataclasses.dataclass
class PnPState:
    """Iterates after step ``k``; ``*_prev`` hold step ``k - 1``."""

    k: int
    x: np.ndarray
    v: np.ndarray
    sigma: float
    x_prev: np.ndarray
    v_prev: np.ndarray
    trace: list = dataclasses.field(default_factory=list)


@dataclasses.dataclass(frozen=True)
class RestoreResult:
    image: np.ndarray
    trace: list
    sigma_s: float
    iterations: int
    stopped_early: bool


def record_trace(state: PnPState, gt=None) -> TraceRow:
    return TraceRow(
        k=state.k,
        rel_err_x=relative_change(state.x, state.x_prev),
        rel_err_v=relative_change(state.v, state.v_prev),
        sigma_k=state.sigma,
        psnr_v=None if gt is None else psnr(state.v, gt),
    )


def trace_to_rows(trace: list) -> list:
    return [dataclasses.asdict(r) for r in trace]


def _check_sizes(y: np.ndarray, spec: DegradationSpec) -> tuple:
    h, w = y.shape[:2]
    s = spec.scale if spec.task == "sisr" else 1
    H, W = s * h, s * w
    if spec.task != "denoise":
        kh, kw = spec.blur.shape
        if kh > H or kw > W:
            raise ValueError(f"kernel {spec.blur.shape} larger than image {(H, W)}")
    return H, W, s


def run_restore(
    y,
    spec: DegradationSpec,
    est: NoiseEstimator | None = None,
    den: Denoiser | None = None,
    cfg: PnPConfig | None = None,
    gt=None,
) -> RestoreResult:
    """Restore ``y`` degraded as described by ``spec``.

    ``spec.sigma_s`` is never read; the observation noise is estimated from
    ``y`` unless ``cfg.sigma_s`` is given.
    """
    y = as_image(y)
    est = est or NoiseEstimator()
    den = den or Denoiser()
    cfg = cfg or PnPConfig()
    H, W, s = _check_sizes(y, spec)
    if cfg.stop_mode == "psnr_oracle" and gt is None:
        raise ValueError("psnr_oracle stopping needs a ground-truth image")
    if gt is not None:
        gt = as_image(gt)
        if gt.shape != (H, W, y.shape[2]):
            raise ValueError(f"ground truth {gt.shape} does not match output size {(H, W, y.shape[2])}")

    rho = cfg.rho if cfg.rho is not None else (den.rho if den.rho is not None else default_rho(spec.task, s))
    den = dataclasses.replace(den, rho=rho)
    sigma_s = clamp_sigma(cfg.sigma_s) if cfg.sigma_s is not None else est(y).sigma
    sigma = clamp_sigma(cfg.sigma0)
    otf = None if spec.task == "denoise" else psf_to_otf(spec.blur, H, W)

    v = upsample_bicubic(y, s) if s > 1 else y.copy()
    x = v
    best_psnr = psnr(v, gt) if cfg.stop_mode == "psnr_oracle" else None
    trace = []
    stopped = False
    k = 0
    log.debug("start: task=%s sigma_s=%.3f rho=%.3f lam=%.3f", spec.task, sigma_s, rho, cfg.lam)

    for k in range(cfg.max_iters):
        weights = FidelityWeights(cfg.lam, sigma_s, sigma)
        if spec.task == "denoise":
            x_new = denoise_x_step(y, v, weights)
        elif spec.task == "deblur":
            x_new = deblur_x_step(y, v, otf, weights)
        else:
            x_new = sisr_x_step(y, v, otf, weights.alpha)
        sigma_new = est(x_new).sigma
        curv = gaussian_curvature(x_new) if den.backend == "cnn" else None
        v_new = den(x_new, sigma_new, curv)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
            raise FloatingPointError(f"non-finite iterate at k={k}")

        state = PnPState(k + 1, x_new, v_new, sigma_new, x, v)
        row = record_trace(state, gt) if (cfg.trace or gt is not None) else None
        if cfg.trace:
            trace.append(row)
        log.debug("k=%d %s", k + 1, row)

        if cfg.stop_mode == "psnr_oracle" and row.psnr_v < best_psnr:
            stopped = True
            break
        x, v, sigma = x_new, v_new, sigma_new
        if cfg.stop_mode == "psnr_oracle":
            best_psnr = row.psnr_v
        if cfg.stop_mode == "rel_change" and relative_change(v, state.v_prev) < cfg.rel_tol:
            stopped = k + 1 < cfg.max_iters
            break

    return RestoreResult(v, trace, sigma_s, k + 1, stopped)
