"""PSNR / SSIM and the CSV and text tables built from them."""

from __future__ import annotations

import csv
import dataclasses
import io
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import as_image, rgb_to_y

__all__ = [
    "MetricReport",
    "psnr",
    "psnr_y",
    "ssim",
    "relative_change",
    "crop_border",
    "evaluate",
    "write_csv",
    "format_table",
    "mean_row",
]

SSIM_WIN = 11
SSIM_STD = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def crop_border(img: np.ndarray, border: int) -> np.ndarray:
    if border <= 0:
        return img
    return img[border:-border, border:-border]


def psnr(a, b, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / MSE)`` over all pixels and channels.

    Identical inputs give ``math.inf``.
    """
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr_y(a, b, peak: float = 1.0) -> float:
    a, b = as_image(a), as_image(b)
    if a.shape[2] == 3:
        a, b = rgb_to_y(a), rgb_to_y(b)
    return psnr(a, b, peak)


def _gauss_window() -> np.ndarray:
    r = np.arange(SSIM_WIN) - SSIM_WIN // 2
    g = np.exp(-(r ** 2) / (2 * SSIM_STD ** 2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    x = sliding_window_view(x, g.size, axis=0) @ g
    return sliding_window_view(x, g.size, axis=1) @ g


def _ssim_channel(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    g = _gauss_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak: float = 1.0) -> float:
    """Mean SSIM, 11x11 Gaussian window (std 1.5), valid region only.

    Color images return the mean of per-channel values.
    """
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < SSIM_WIN or a.shape[1] < SSIM_WIN:
        raise ValueError(f"image smaller than the {SSIM_WIN}x{SSIM_WIN} window")
    return float(np.mean([_ssim_channel(a[:, :, c], b[:, :, c], peak) for c in range(a.shape[2])]))


def relative_change(new: np.ndarray, old: np.ndarray) -> float:
    """``||new - old||_2 / ||new||_2`` (``0`` when both are zero)."""
    num = float(np.linalg.norm(np.ravel(new) - np.ravel(old)))
    den = float(np.linalg.norm(np.ravel(new)))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


@dataclasses.dataclass
class MetricReport:
    name: str
    psnr_rgb: float
    psnr_y: float | None
    ssim: float

    def as_row(self) -> dict:
        return dataclasses.asdict(self)


def evaluate(name: str, restored, gt, border: int = 0) -> MetricReport:
    restored = crop_border(as_image(restored), border)
    gt = crop_border(as_image(gt), border)
    py = psnr_y(restored, gt) if gt.shape[2] == 3 else None
    return MetricReport(name, psnr(restored, gt), py, ssim(restored, gt))


def mean_row(rows: list, label: str = "mean", key: str = "image") -> dict:
    """Average every numeric column of ``rows``; other columns are copied
    from the first row, except ``key`` which becomes ``label``."""
    if not rows:
        raise ValueError("no rows to average")
    out = {}
    for col in rows[0]:
        vals = [r[col] for r in rows]
        if col != key and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            out[col] = float(np.mean(vals))
        elif col != key and all(v is None for v in vals):
            out[col] = None
        else:
            out[col] = vals[0]
    out[key] = label
    return out


def _fmt(v, spec: str = ".4f") -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else format(v, spec)
    return str(v)


def write_csv(rows: list, fh, digits: int = 8) -> None:
    """Write dict rows to a text stream; column order follows the first row.

    Floats keep ``digits`` significant digits.
    """
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(v, f".{digits}g") for k, v in r.items()})


def format_table(rows: list) -> str:
    """Aligned plain-text table of dict rows."""
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[_fmt(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    buf = io.StringIO()
    buf.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip() + "\n")
    buf.write("  ".join("-" * w for w in widths) + "\n")
    for row in cells:
        buf.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")
    return buf.getvalue()
