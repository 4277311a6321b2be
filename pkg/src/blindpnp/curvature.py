"""Gaussian curvature of the intensity surface ``z = f(x, y)``.

Derivatives use central differences with unit grid spacing and replicate
(edge) padding. Intensities are used as heights without rescaling.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .image import as_image

__all__ = ["Gradients", "image_gradients", "gaussian_curvature"]


class Gradients(NamedTuple):
    fx: np.ndarray
    fy: np.ndarray
    fxx: np.ndarray
    fyy: np.ndarray
    fxy: np.ndarray


def image_gradients(img: np.ndarray) -> Gradients:
    """First and second central differences of every channel.

    ``x`` runs along columns (index ``j``) and ``y`` along rows (index ``i``).
    """
    img = as_image(img)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"image must be at least 3x3, got {img.shape[:2]}")
    p = np.pad(img, ((1, 1), (1, 1), (0, 0)), mode="edge")
    c = p[1:-1, 1:-1]
    n, s = p[:-2, 1:-1], p[2:, 1:-1]
    w, e = p[1:-1, :-2], p[1:-1, 2:]
    fx = (e - w) / 2.0
    fy = (s - n) / 2.0
    fxx = e - 2.0 * c + w
    fyy = s - 2.0 * c + n
    fxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / 4.0
    return Gradients(fx, fy, fxx, fyy, fxy)


def gaussian_curvature(img: np.ndarray) -> np.ndarray:
    """Per-channel map ``(fxx fyy - fxy^2) / (1 + fx^2 + fy^2)^2``."""
    g = image_gradients(img)
    num = g.fxx * g.fyy - g.fxy ** 2
    den = (1.0 + g.fx ** 2 + g.fy ** 2) ** 2
    return num / den
