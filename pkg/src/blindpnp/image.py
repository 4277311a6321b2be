"""Image containers, color transforms, resampling and 8-bit file I/O.

Images are plain ``numpy`` arrays of shape ``(H, W, C)`` with ``C`` in
``{1, 3}`` and float64 values nominally in ``[0, 1]``. Functions never
mutate their inputs.
"""

from __future__ import annotations

import enum
import os

import numpy as np
from PIL import Image

__all__ = [
    "ColorSpace",
    "as_image",
    "color_space",
    "load_image",
    "save_image",
    "quantize",
    "rgb_to_y",
    "upsample_bicubic",
    "circular_shift",
]

Y_WEIGHTS = np.array([0.299, 0.587, 0.114])


class ColorSpace(enum.Enum):
    GRAY = "gray"
    RGB = "rgb"
    YCBCR = "ycbcr"


def as_image(img, copy: bool = False) -> np.ndarray:
    """Validate ``img`` and return it as a float64 ``(H, W, C)`` array.

    2-D input is treated as a single-channel image.
    """
    arr = np.array(img, dtype=np.float64) if copy else np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("image has zero size")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def color_space(img: np.ndarray) -> ColorSpace:
    return ColorSpace.GRAY if img.shape[2] == 1 else ColorSpace.RGB


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG, PGM or PPM file into a ``[0, 1]`` float image.

    Raises
    ------
    OSError
        If the file cannot be read.
    ValueError
        If the file is not 8-bit gray or 8-bit RGB (16-bit, alpha, etc.).
    """
    with Image.open(os.fspath(path)) as im:
        if im.mode == "P":
            im = im.convert("RGB")
        if im.mode not in ("L", "RGB"):
            raise ValueError(
                f"{path}: unsupported image mode {im.mode!r}; "
                "only 8-bit gray (L) and 8-bit RGB are accepted"
            )
        data = np.asarray(im, dtype=np.uint8)
    return as_image(data.astype(np.float64) / 255.0)


def quantize(img: np.ndarray) -> np.ndarray:
    """Clip to ``[0, 1]`` and round half away from zero to uint8."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0
    # values are non-negative after clipping, so floor(v + 0.5) rounds half up
    return np.floor(v + 0.5).astype(np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write ``img`` as an 8-bit file; format follows the path suffix."""
    img = as_image(img)
    q = quantize(img)
    q = q[:, :, 0] if q.shape[2] == 1 else q
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    fmt = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM", ".pnm": "PPM"}.get(ext)
    if fmt is None:
        raise ValueError(f"unsupported output suffix {ext!r}")
    if ext == ".pgm" and q.ndim == 3:
        raise ValueError("cannot write an RGB image as PGM")
    if ext == ".ppm" and q.ndim == 2:
        q = np.repeat(q[:, :, None], 3, axis=2)
    Image.fromarray(q).save(path, format=fmt)


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """Full-range BT.601 luma of an RGB image, returned as a gray image."""
    img = as_image(img)
    if img.shape[2] != 3:
        raise ValueError("rgb_to_y requires a 3-channel image")
    return img @ Y_WEIGHTS[:, None]


def _cubic(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    out = np.where(t <= 1, (a + 2) * t3 - (a + 3) * t2 + 1, 0.0)
    return np.where((t > 1) & (t < 2), a * t3 - 5 * a * t2 + 8 * a * t - 4 * a, out)


def _bicubic_matrix(n: int, s: int) -> np.ndarray:
    """``(s*n, n)`` interpolation matrix with replicate boundary."""
    dst = np.arange(s * n)
    src = (dst + 0.5) / s - 0.5
    base = np.floor(src).astype(int)
    mat = np.zeros((s * n, n))
    for off in range(-1, 3):
        idx = base + off
        w = _cubic(src - idx)
        np.add.at(mat, (dst, np.clip(idx, 0, n - 1)), w)
    return mat


def upsample_bicubic(img: np.ndarray, s: int) -> np.ndarray:
    """Separable Catmull-Rom (a = -0.5) upsampling by an integer factor."""
    img = as_image(img)
    if int(s) != s or s < 1:
        raise ValueError(f"scale must be an integer >= 1, got {s}")
    s = int(s)
    if s == 1:
        return img.copy()
    h, w, _ = img.shape
    rows, cols = _bicubic_matrix(h, s), _bicubic_matrix(w, s)
    return np.einsum("ih,hwc,jw->ijc", rows, img, cols)


def circular_shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Move pixel ``(i, j)`` to ``((i + dy) mod H, (j + dx) mod W)``."""
    return np.roll(np.asarray(img), (int(dy), int(dx)), axis=(0, 1))
