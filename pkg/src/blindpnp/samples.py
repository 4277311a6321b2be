"""Bundled test images and blur kernels.

Images (8-bit, 2x downscaled from scikit-image's public-domain / CC0 set):
``camera``, ``moon`` (gray) and ``astronaut``, ``coffee`` (RGB).

Kernels: ``motion19`` and ``motion27`` (synthetic camera-shake paths),
``gauss7_std0.7`` and ``bicubic_x2`` / ``_x3`` / ``_x4``.
"""

from __future__ import annotations

import importlib.resources

import numpy as np

from .degradation import load_kernel
from .image import load_image

__all__ = ["list_samples", "sample_image", "sample_path", "list_kernels", "shipped_kernel", "kernel_path", "center_crop"]


def _dir(sub: str):
    return importlib.resources.files("blindpnp") / "data" / sub


def list_samples() -> list:
    return sorted(p.name.rsplit(".", 1)[0] for p in _dir("images").iterdir() if p.name.endswith((".pgm", ".ppm")))


def sample_path(name: str):
    for ext in (".pgm", ".ppm"):
        p = _dir("images") / (name + ext)
        if p.is_file():
            return p
    raise KeyError(f"no sample image {name!r}; available: {list_samples()}")


def sample_image(name: str) -> np.ndarray:
    return load_image(sample_path(name))


def list_kernels() -> list:
    return sorted(p.name[:-4] for p in _dir("kernels").iterdir() if p.name.endswith(".txt"))


def kernel_path(name: str):
    p = _dir("kernels") / (name + ".txt")
    if not p.is_file():
        raise KeyError(f"no shipped kernel {name!r}; available: {list_kernels()}")
    return p


def shipped_kernel(name: str) -> np.ndarray:
    return load_kernel(kernel_path(name))


def center_crop(img: np.ndarray, h: int, w: int | None = None) -> np.ndarray:
    w = h if w is None else w
    H, W = img.shape[:2]
    if h > H or w > W:
        raise ValueError(f"crop {(h, w)} larger than image {(H, W)}")
    top, left = (H - h) // 2, (W - w) // 2
    return img[top:top + h, left:left + w].copy()
