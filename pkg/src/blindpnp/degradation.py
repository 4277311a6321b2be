"""Synthetic degradations: circular blur, s-fold decimation and seeded noise.

Noise is drawn from ``numpy.random.Philox``, a counter-based generator whose
stream is fixed by the seed and identical across platforms.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os

import numpy as np

from .image import as_image

__all__ = [
    "DegradationSpec",
    "as_kernel",
    "delta_kernel",
    "make_gaussian_kernel",
    "make_bicubic_kernel",
    "load_kernel",
    "save_kernel",
    "kernel_hash",
    "convolve_circular",
    "downsample_select",
    "upsample_zero",
    "add_gaussian_noise",
    "degrade",
    "TASKS",
]

TASKS = ("denoise", "deblur", "sisr")


def as_kernel(k) -> np.ndarray:
    """Validate a blur kernel: 2-D, odd sides, finite, positive sum."""
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError(f"kernel must be 2-D, got shape {k.shape}")
    if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError(f"kernel sides must be odd, got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel contains non-finite weights")
    if k.sum() <= 0:
        raise ValueError("kernel weights must have a positive sum")
    return k


def delta_kernel(size: int = 1) -> np.ndarray:
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return as_kernel(k)


def make_gaussian_kernel(size: int, std: float) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {size}")
    if std <= 0:
        raise ValueError("std must be positive")
    r = np.arange(size) - size // 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * std * std))
    return g / g.sum()


def make_bicubic_kernel(s: int, a: float = -0.5) -> np.ndarray:
    """Windowed-cubic antialiasing kernel approximating bicubic downscaling.

    The 1-D profile is the Keys cubic stretched by ``s`` and sampled on
    ``4s + 1`` taps; the 2-D kernel is its normalized outer product.
    """
    if s < 1:
        raise ValueError("scale must be >= 1")
    if s == 1:
        return delta_kernel(1)
    t = np.abs(np.arange(-2 * s, 2 * s + 1) / s)
    t2, t3 = t * t, t ** 3
    w = np.where(t <= 1, (a + 2) * t3 - (a + 3) * t2 + 1, 0.0)
    w = np.where((t > 1) & (t < 2), a * t3 - 5 * a * t2 + 8 * a * t - 4 * a, w)
    k = np.outer(w, w)
    return as_kernel(k / k.sum())


def load_kernel(path) -> np.ndarray:
    """Read the plain-text kernel format: ``"kh kw"`` then ``kh`` rows."""
    with open(os.fspath(path)) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty kernel file")
    try:
        kh, kw = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from exc
    rows = [[float(t) for t in ln.split()] for ln in lines[1:]]
    if len(rows) != kh or any(len(r) != kw for r in rows):
        raise ValueError(f"{path}: expected {kh} rows of {kw} values")
    return as_kernel(np.array(rows))


def save_kernel(k: np.ndarray, path) -> None:
    k = as_kernel(k)
    with open(os.fspath(path), "w") as fh:
        fh.write(f"{k.shape[0]} {k.shape[1]}\n")
        for row in k:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def kernel_hash(k: np.ndarray) -> str:
    k = np.ascontiguousarray(as_kernel(k), dtype="<f8")
    h = hashlib.sha256(f"{k.shape[0]}x{k.shape[1]}:".encode())
    h.update(k.tobytes())
    return h.hexdigest()


def convolve_circular(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Periodic convolution with a center-anchored kernel.

    ``out(i, j) = sum_{u, v} k(u, v) img(i - u, j - v)`` where ``(u, v)`` run
    over kernel offsets relative to its middle element.
    """
    img = as_image(img)
    k = as_kernel(k)
    kh, kw = k.shape
    h, w = img.shape[:2]
    if kh > h or kw > w:
        raise ValueError(f"kernel {k.shape} larger than image {(h, w)}")
    out = np.zeros_like(img)
    ch, cw = kh // 2, kw // 2
    for a in range(kh):
        for b in range(kw):
            if k[a, b] != 0.0:
                out += k[a, b] * np.roll(img, (a - ch, b - cw), axis=(0, 1))
    return out


def _check_divisible(shape, s: int) -> None:
    if s < 1 or int(s) != s:
        raise ValueError(f"scale must be an integer >= 1, got {s}")
    if shape[0] % s or shape[1] % s:
        raise ValueError(f"size {shape[:2]} not divisible by scale {s}")


def downsample_select(img: np.ndarray, s: int) -> np.ndarray:
    """Keep the upper-left pixel of every ``s x s`` block."""
    img = np.asarray(img)
    _check_divisible(img.shape, s)
    return img[:: int(s), :: int(s)].copy()


def upsample_zero(img: np.ndarray, s: int) -> np.ndarray:
    """Zero-insertion upsampling; the adjoint of :func:`downsample_select`."""
    img = np.asarray(img)
    if s < 1 or int(s) != s:
        raise ValueError(f"scale must be an integer >= 1, got {s}")
    s = int(s)
    out = np.zeros((img.shape[0] * s, img.shape[1] * s) + img.shape[2:], dtype=img.dtype)
    out[::s, ::s] = img
    return out


def add_gaussian_noise(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, (sigma/255)^2) noise. ``sigma`` is on the 0-255 scale.

    The result is not clipped.
    """
    img = as_image(img)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return img.copy()
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return img + (sigma / 255.0) * rng.standard_normal(img.shape)


@dataclasses.dataclass(frozen=True)
class DegradationSpec:
    """What was done to a clean image to produce an observation."""

    task: str
    kernel: np.ndarray | None = None
    scale: int = 1
    sigma_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.kernel is not None:
            object.__setattr__(self, "kernel", as_kernel(self.kernel))
        if self.sigma_s < 0:
            raise ValueError("sigma_s must be non-negative")
        if self.task == "deblur":
            if self.kernel is None:
                raise ValueError("deblur requires a kernel")
            if self.scale != 1:
                raise ValueError("deblur requires scale 1")
        elif self.task == "sisr":
            if self.scale not in (2, 3, 4):
                raise ValueError(f"sisr scale must be 2, 3 or 4, got {self.scale}")
        else:
            if self.scale != 1:
                raise ValueError("denoise requires scale 1")
            if self.kernel is not None:
                raise ValueError("denoise takes no kernel")

    @property
    def blur(self) -> np.ndarray:
        """The kernel, or a 1x1 delta when none is set."""
        return self.kernel if self.kernel is not None else delta_kernel(1)


def degrade(x: np.ndarray, spec: DegradationSpec) -> np.ndarray:
    """Apply ``y = (k * x) decimated by s + n`` according to ``spec``."""
    x = as_image(x)
    if spec.task == "sisr":
        _check_divisible(x.shape, spec.scale)
    y = x
    if spec.task != "denoise":
        y = convolve_circular(y, spec.blur)
    if spec.task == "sisr":
        y = downsample_select(y, spec.scale)
    return add_gaussian_noise(y, spec.sigma_s, spec.seed)
