"""Closed-form FFT solvers for the quadratic data-fidelity step.

All solvers assume periodic boundaries. Two problems are covered:

deblurring
    ``(sk^2 A^T A + lam ss^2 I) x = sk^2 A^T y + lam ss^2 v``

super-resolution
    ``((S A)^T (S A) + alpha I) x = (S A)^T y + alpha v``

with ``A`` a circular blur, ``S`` the upper-left-pixel decimator and
``alpha = lam ss^2 / sk^2``. The SISR solve uses the aliasing block
structure of the decimated spectrum so that only an elementwise division
on the low-resolution grid is required.

:func:`dense_oracle_solve` solves the same systems with explicit matrices
and exists to check the fast paths on small instances.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from .degradation import (
    DegradationSpec,
    as_kernel,
    delta_kernel,
    downsample_select,
    upsample_zero,
)
from .image import as_image

__all__ = [
    "FidelityWeights",
    "psf_to_otf",
    "apply_otf",
    "deblur_x_step",
    "block_downsample_avg",
    "block_distribute_mul",
    "sisr_x_step",
    "denoise_x_step",
    "dense_oracle_solve",
    "fidelity_objective",
]

IMAG_TOL = 1e-6
DENSE_MAX_PIXELS = 256


@dataclasses.dataclass(frozen=True)
class FidelityWeights:
    """``lam``, ``sigma_s`` and ``sigma_k``; sigmas on the 0-255 scale."""

    lam: float
    sigma_s: float
    sigma_k: float

    def __post_init__(self):
        for name in ("lam", "sigma_s", "sigma_k"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and > 0, got {val}")

    @property
    def data_weight(self) -> float:
        return self.sigma_k ** 2

    @property
    def prior_weight(self) -> float:
        return self.lam * self.sigma_s ** 2

    @property
    def alpha(self) -> float:
        return self.prior_weight / self.data_weight


def psf_to_otf(k: np.ndarray, h: int, w: int) -> np.ndarray:
    """Frequency response of ``k`` on an ``h x w`` periodic grid.

    The kernel's middle element is moved to index ``(0, 0)`` so that
    multiplying spectra reproduces :func:`~blindpnp.degradation.convolve_circular`.
    """
    k = as_kernel(k)
    kh, kw = k.shape
    if kh > h or kw > w:
        raise ValueError(f"kernel {k.shape} does not fit in {(h, w)}")
    pad = np.zeros((h, w))
    pad[:kh, :kw] = k
    pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.fft2(pad)


def _real(z: np.ndarray) -> np.ndarray:
    re = z.real
    scale = max(float(np.max(np.abs(re), initial=0.0)), np.finfo(float).tiny)
    resid = float(np.max(np.abs(z.imag), initial=0.0))
    if resid > IMAG_TOL * scale:
        raise FloatingPointError(
            f"imaginary residue {resid:.3g} exceeds {IMAG_TOL:g} * {scale:.3g}"
        )
    return np.ascontiguousarray(re)


def _fft(img: np.ndarray) -> np.ndarray:
    return np.fft.fft2(img, axes=(0, 1))


def _ifft_real(spec: np.ndarray) -> np.ndarray:
    return _real(np.fft.ifft2(spec, axes=(0, 1)))


def apply_otf(img: np.ndarray, otf: np.ndarray) -> np.ndarray:
    """Circular blur computed in the frequency domain."""
    img = as_image(img)
    if otf.shape != img.shape[:2]:
        raise ValueError(f"otf shape {otf.shape} != image size {img.shape[:2]}")
    return _ifft_real(_fft(img) * otf[:, :, None])


def deblur_x_step(y, v, otf: np.ndarray, weights: FidelityWeights) -> np.ndarray:
    y, v = as_image(y), as_image(v)
    if y.shape != v.shape or otf.shape != y.shape[:2]:
        raise ValueError(
            f"size mismatch: y {y.shape}, v {v.shape}, otf {otf.shape}"
        )
    a = weights.data_weight
    b = weights.prior_weight
    num = a * np.conj(otf)[:, :, None] * _fft(y) + b * _fft(v)
    den = a * (np.abs(otf) ** 2)[:, :, None] + b
    return _ifft_real(num / den)


def denoise_x_step(y, v, weights: FidelityWeights) -> np.ndarray:
    """Identity-operator case: a convex combination of ``y`` and ``v``."""
    y, v = as_image(y), as_image(v)
    if y.shape != v.shape:
        raise ValueError(f"size mismatch: y {y.shape}, v {v.shape}")
    a = weights.data_weight
    b = weights.prior_weight
    return (a * y + b * v) / (a + b)


def _blocks(freq: np.ndarray, s: int) -> np.ndarray:
    """View ``(H, W, ...)`` as ``(s, H/s, s, W/s, ...)`` aliasing sub-arrays."""
    h, w = freq.shape[:2]
    if s < 1 or h % s or w % s:
        raise ValueError(f"size {(h, w)} not divisible by scale {s}")
    return freq.reshape((s, h // s, s, w // s) + freq.shape[2:])


def block_downsample_avg(freq: np.ndarray, s: int) -> np.ndarray:
    """Mean over the ``s * s`` aliasing sub-arrays of a spectrum.

    Sub-array ``(a, b)`` holds entries ``(i + a H/s, j + b W/s)``.
    """
    return _blocks(np.asarray(freq), s).mean(axis=(0, 2))


def block_distribute_mul(freq: np.ndarray, small: np.ndarray, s: int) -> np.ndarray:
    """Multiply every aliasing sub-array of ``freq`` elementwise by ``small``."""
    freq, small = np.asarray(freq), np.asarray(small)
    blocks = _blocks(freq, s)
    if small.shape[:2] != (blocks.shape[1], blocks.shape[3]):
        raise ValueError(
            f"small array {small.shape} does not match blocks of {freq.shape} at s={s}"
        )
    prod = blocks * small[None, :, None]
    return prod.reshape(freq.shape[:2] + prod.shape[4:])


def sisr_x_step(y, v, otf: np.ndarray, alpha: float) -> np.ndarray:
    """Exact solve of ``((SA)^T SA + alpha I) x = (SA)^T y + alpha v``.

    Parameters
    ----------
    y : low-resolution observation, ``(h, w, C)``
    v : high-resolution prior image, ``(s h, s w, C)``
    otf : spectrum of the blur at high resolution, ``(s h, s w)``
    alpha : positive penalty ratio
    """
    y, v = as_image(y), as_image(v)
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    H, W, C = v.shape
    h, w, c = y.shape
    if c != C or H % h or W % w or H // h != W // w:
        raise ValueError(f"inconsistent sizes: y {y.shape}, v {v.shape}")
    s = H // h
    if otf.shape != (H, W):
        raise ValueError(f"otf shape {otf.shape} != {(H, W)}")

    fa = otf[:, :, None]
    fac = np.conj(fa)
    d = fac * _fft(upsample_zero(y, s)) + alpha * _fft(v)
    small = block_downsample_avg(fa * d, s) / (block_downsample_avg(np.abs(fa) ** 2, s) + alpha)
    return _ifft_real((d - block_distribute_mul(np.broadcast_to(fac, d.shape), small, s)) / alpha)


def _circulant(k: np.ndarray, h: int, w: int) -> np.ndarray:
    """Explicit ``(hw, hw)`` matrix of the periodic convolution by ``k``."""
    kh, kw = k.shape
    ch, cw = kh // 2, kw // 2
    n = h * w
    mat = np.zeros((n, n))
    rows = np.arange(n)
    ri, rj = np.divmod(rows, w)
    for a in range(kh):
        for b in range(kw):
            cols = ((ri - (a - ch)) % h) * w + (rj - (b - cw)) % w
            mat[rows, cols] += k[a, b]
    return mat


def _selection(h: int, w: int, s: int) -> np.ndarray:
    lo = np.arange((h // s) * (w // s))
    li, lj = np.divmod(lo, w // s)
    mat = np.zeros((lo.size, h * w))
    mat[lo, (s * li) * w + s * lj] = 1.0
    return mat


def dense_oracle_solve(spec: DegradationSpec, y, v, weights: FidelityWeights) -> np.ndarray:
    """Solve the x-step normal equations with explicit matrices.

    Only for tiny instances (at most 256 high-resolution pixels).
    """
    y, v = as_image(y), as_image(v)
    H, W, C = v.shape
    if H * W > DENSE_MAX_PIXELS:
        raise ValueError(f"instance {H}x{W} too large for the dense oracle")
    s = spec.scale if spec.task == "sisr" else 1
    if y.shape != (H // s, W // s, C) or H % s or W % s:
        raise ValueError(f"inconsistent sizes: y {y.shape}, v {v.shape}, s={s}")
    k = delta_kernel(1) if spec.task == "denoise" else spec.blur
    op = _circulant(as_kernel(k), H, W)
    if s > 1:
        op = _selection(H, W, s) @ op
    a, b = weights.data_weight, weights.prior_weight
    lhs = a * op.T @ op + b * np.eye(H * W)
    out = np.empty_like(v)
    for c in range(C):
        rhs = a * op.T @ y[:, :, c].ravel() + b * v[:, :, c].ravel()
        out[:, :, c] = scipy.linalg.solve(lhs, rhs, assume_a="pos").reshape(H, W)
    return out


def fidelity_objective(x, y, v, otf: np.ndarray, weights: FidelityWeights, s: int = 1) -> float:
    """Value of ``||y - S A x||^2 / (2 lam ss^2) + ||v - x||^2 / (2 sk^2)``."""
    x = as_image(x)
    ax = _ifft_real(_fft(x) * otf[:, :, None])
    if s > 1:
        ax = downsample_select(ax, s)
    r = np.sum((as_image(y) - ax) ** 2)
    p = np.sum((as_image(v) - x) ** 2)
    return float(r / (2 * weights.prior_weight) + p / (2 * weights.data_weight))
