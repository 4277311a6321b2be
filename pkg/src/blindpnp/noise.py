"""Noise-level estimation on the 0-255 scale.

Two backends are provided: a robust median estimator on the finest Haar
diagonal band (the default), and a learned estimation network executed by
:mod:`blindpnp.nn`.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .image import as_image
from .nn.graph import run_on_image

__all__ = [
    "SIGMA_FLOOR",
    "SIGMA_CEIL",
    "NoiseEstimate",
    "NoiseEstimator",
    "clamp_sigma",
    "haar_diagonal",
    "estimate_sigma_mad",
    "estimate_sigma_cnn",
]

SIGMA_FLOOR = 0.1
SIGMA_CEIL = 75.0
MAD_TO_STD = 0.6745


@dataclasses.dataclass(frozen=True)
class NoiseEstimate:
    sigma: float
    distribution_map: np.ndarray | None = None


def clamp_sigma(sigma: float) -> float:
    if not np.isfinite(sigma):
        raise FloatingPointError(f"non-finite noise estimate {sigma}")
    return float(min(max(sigma, SIGMA_FLOOR), SIGMA_CEIL))


def haar_diagonal(img: np.ndarray) -> np.ndarray:
    """One-level orthonormal Haar HH band; odd trailing rows/cols dropped."""
    img = as_image(img)
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    if h == 0 or w == 0:
        raise ValueError(f"image must be at least 2x2, got {img.shape[:2]}")
    a = img[0:h:2, 0:w:2]
    b = img[0:h:2, 1:w:2]
    c = img[1:h:2, 0:w:2]
    d = img[1:h:2, 1:w:2]
    return (a - b - c + d) / 2.0


def estimate_sigma_mad(img: np.ndarray) -> NoiseEstimate:
    """``255 * median(|HH|) / 0.6745``, averaged over channels, clamped."""
    hh = haar_diagonal(img)
    per_channel = np.median(np.abs(hh).reshape(-1, hh.shape[2]), axis=0) / MAD_TO_STD
    return NoiseEstimate(clamp_sigma(255.0 * float(per_channel.mean())))


def estimate_sigma_cnn(img: np.ndarray, graph) -> NoiseEstimate:
    """Run an estimation network and reduce its level map to a scalar.

    The graph must expose ``level`` and ``noise`` heads sized like the image.
    The scalar is the spatial mean of the level map times 255.
    """
    img = as_image(img)
    heads = run_on_image(graph, img)
    level, noise = heads.get("level"), heads.get("noise")
    if level is None or noise is None:
        raise ValueError(f"estimator graph must output 'level' and 'noise', got {sorted(heads)}")
    if level.shape[:2] != img.shape[:2] or noise.shape != img.shape:
        raise ValueError(
            f"head shapes level {level.shape}, noise {noise.shape} do not match image {img.shape}"
        )
    return NoiseEstimate(clamp_sigma(255.0 * float(level.mean())), noise)


@dataclasses.dataclass(frozen=True)
class NoiseEstimator:
    """Callable handle: ``backend`` is ``"mad"`` or ``"cnn"`` with a graph."""

    backend: str = "mad"
    graph: object = None

    def __post_init__(self):
        if self.backend not in ("mad", "cnn"):
            raise ValueError(f"unknown estimator backend {self.backend!r}")
        if self.backend == "cnn" and self.graph is None:
            raise ValueError("cnn estimator needs a graph")

    def __call__(self, img: np.ndarray) -> NoiseEstimate:
        if self.backend == "mad":
            return estimate_sigma_mad(img)
        return estimate_sigma_cnn(img, self.graph)
