"""Pluggable Gaussian denoisers ``D(x, rho * sigma, curvature)``.

Backends
--------
identity
    Returns ``x``; useful to isolate the data-fidelity step.
tv
    Isotropic total-variation proximal map solved by Chambolle's dual
    projection. Strength is ``gamma * rho * sigma / 255`` with
    ``gamma = 0.9``; step ``tau = 1/8``; fixed iteration count.
cnn
    A curvature-aware U-Net denoising graph from :mod:`blindpnp.nn`.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .curvature import gaussian_curvature
from .image import as_image
from .nn.graph import run_on_image
from .noise import estimate_sigma_cnn

__all__ = [
    "TV_GAMMA",
    "TV_ITERS",
    "TV_STEP",
    "Denoiser",
    "default_rho",
    "denoise",
    "tv_denoise",
    "total_variation",
    "assemble_denoiser_input",
    "cnn_denoise",
    "blind_denoise",
]

TV_GAMMA = 0.9
TV_ITERS = 100
TV_STEP = 0.125
TV_MIN_STRENGTH = 1e-12
BACKENDS = ("identity", "tv", "cnn")

_SISR_RHO = {2: 5.0, 3: 25.0, 4: 50.0}


def default_rho(task: str, scale: int = 1) -> float:
    if task == "deblur":
        return 1.2
    if task == "sisr":
        return _SISR_RHO[scale]
    return 1.0


def _grad(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1] = u[1:] - u[:-1]
    return gx, gy


def _div(px, py):
    # negative adjoint of _grad
    d = np.zeros_like(px)
    d[:, :-1] += px[:, :-1]
    d[:, 1:] -= px[:, :-1]
    d[:-1] += py[:-1]
    d[1:] -= py[:-1]
    return d


def total_variation(img: np.ndarray) -> float:
    """Isotropic TV with forward differences, summed over channels."""
    gx, gy = _grad(as_image(img))
    return float(np.sum(np.sqrt(gx ** 2 + gy ** 2)))


def tv_denoise(x: np.ndarray, strength: float, iters: int = TV_ITERS) -> np.ndarray:
    """Approximate ``argmin_v 0.5 ||v - x||^2 + strength * TV(v)``.

    Channels are processed independently. No pixel moves by more than
    ``4 * strength``, so strengths below ``TV_MIN_STRENGTH`` return ``x``
    (this also keeps ``x / strength`` finite).
    """
    x = as_image(x)
    if strength < 0:
        raise ValueError("strength must be non-negative")
    if strength < TV_MIN_STRENGTH or iters <= 0:
        return x.copy()
    px = np.zeros_like(x)
    py = np.zeros_like(x)
    xs = x / strength
    for _ in range(iters):
        gx, gy = _grad(_div(px, py) - xs)
        norm = 1.0 + TV_STEP * np.sqrt(gx ** 2 + gy ** 2)
        px = (px + TV_STEP * gx) / norm
        py = (py + TV_STEP * gy) / norm
    return x - strength * _div(px, py)


def assemble_denoiser_input(x, curv, sigma: float, rho: float) -> np.ndarray:
    """Stack ``[x | curv | rho * sigma / 255]`` along channels."""
    x, curv = as_image(x), np.asarray(curv, dtype=np.float64)
    if curv.shape != x.shape:
        raise ValueError(f"curvature {curv.shape} does not match image {x.shape}")
    level = np.full(x.shape[:2] + (1,), rho * sigma / 255.0)
    return np.concatenate([x, curv, level], axis=2)


def cnn_denoise(graph, x, sigma: float, curv, rho: float = 1.0) -> np.ndarray:
    x = as_image(x)
    if graph.kind != "denoiser" or graph.image_channels != x.shape[2]:
        raise ValueError(
            f"graph ({graph.kind}, {graph.in_channels} inputs) cannot denoise a "
            f"{x.shape[2]}-channel image"
        )
    return run_on_image(graph, assemble_denoiser_input(x, curv, sigma, rho))["image"]


@dataclasses.dataclass(frozen=True)
class Denoiser:
    """Denoiser handle; ``rho`` scales the noise level it is given.

    ``rho=None`` means 1 when called directly and the task default inside
    :func:`blindpnp.pnp.run_restore`.
    """

    backend: str = "tv"
    rho: float | None = None
    graph: object = None
    tv_gamma: float = TV_GAMMA
    tv_iters: int = TV_ITERS

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown denoiser backend {self.backend!r}; expected {BACKENDS}")
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.backend == "cnn" and self.graph is None:
            raise ValueError("cnn denoiser needs a graph")

    def __call__(self, x, sigma: float, curv=None) -> np.ndarray:
        return denoise(self, x, sigma, curv)


def denoise(handle: Denoiser, x, sigma: float, curv=None) -> np.ndarray:
    x = as_image(x)
    rho = 1.0 if handle.rho is None else handle.rho
    if handle.backend == "identity":
        out = x.copy()
    elif handle.backend == "tv":
        out = tv_denoise(x, handle.tv_gamma * rho * sigma / 255.0, handle.tv_iters)
    else:
        if curv is None:
            curv = gaussian_curvature(x)
        try:
            out = cnn_denoise(handle.graph, x, sigma, curv, rho)
        except ValueError as exc:
            raise ValueError(f"cnn denoiser failed: {exc}") from exc
    if out.shape != x.shape or not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{handle.backend} denoiser returned an invalid image")
    return out


def blind_denoise(y, estimator, denoiser_graph, rho: float = 1.0):
    """Two-stage blind denoising: estimate, pre-clean, curvature, denoise.

    Curvature is taken from ``y`` minus the estimated noise distribution.
    Returns ``(clean, estimate)``.
    """
    y = as_image(y)
    est = estimate_sigma_cnn(y, estimator)
    curv = gaussian_curvature(y - est.distribution_map)
    return cnn_denoise(denoiser_graph, y, est.sigma, curv, rho), est
