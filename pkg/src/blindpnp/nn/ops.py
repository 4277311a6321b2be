"""Forward-only tensor primitives on ``(N, C, H, W)`` float arrays."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["conv2d", "conv_transpose2x2", "relu", "sigmoid"]


def _check4(x: np.ndarray, what: str) -> None:
    if x.ndim != 4:
        raise ValueError(f"{what} must be 4-D (N, C, H, W), got shape {x.shape}")


def conv2d(x, w, b=None, stride: int = 1, pad: int = 0, groups: int = 1) -> np.ndarray:
    """Grouped 2-D cross-correlation with zero padding.

    ``w`` has shape ``(C_out, C_in / groups, kh, kw)``. Output spatial size is
    ``floor((H + 2 pad - kh) / stride) + 1``.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    _check4(x, "input")
    _check4(w, "weight")
    n, cin, h, wd = x.shape
    cout, cg, kh, kw = w.shape
    if groups < 1 or cin % groups or cout % groups or cin // groups != cg:
        raise ValueError(
            f"weight {w.shape} incompatible with {cin} input channels and groups={groups}"
        )
    if stride < 1 or pad < 0:
        raise ValueError("stride must be >= 1 and pad >= 0")
    if h + 2 * pad < kh or wd + 2 * pad < kw:
        raise ValueError(f"kernel {(kh, kw)} larger than padded input {(h, wd)} + {pad}")
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (x.shape[2] - kh) // stride + 1
    wo = (x.shape[3] - kw) // stride + 1

    if kh == 1 and kw == 1 and groups == 1:
        xs = x[:, :, ::stride, ::stride][:, :, :ho, :wo]
        out = np.einsum("nchw,oc->nohw", xs, w[:, :, 0, 0], optimize=True)
    elif groups == cin and cg == 1:
        # depthwise (optionally with channel multiplier): accumulate over taps
        mult = cout // cin
        xr = np.repeat(x, mult, axis=1) if mult > 1 else x
        out = np.zeros((n, cout, ho, wo))
        for i in range(kh):
            for j in range(kw):
                tap = xr[:, :, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride]
                out += tap * w[None, :, 0, i, j, None, None]
    else:
        win = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
        og = cout // groups
        parts = []
        for g in range(groups):
            xg = win[:, g * cg : (g + 1) * cg]
            wg = w[g * og : (g + 1) * og]
            parts.append(np.einsum("nchwij,ocij->nohw", xg, wg, optimize=True))
        out = parts[0] if groups == 1 else np.concatenate(parts, axis=1)
    if b is not None:
        out = out + np.asarray(b, dtype=np.float64)[None, :, None, None]
    return out


def conv_transpose2x2(x, w, b=None) -> np.ndarray:
    """Stride-2 transposed convolution with a 2x2 kernel.

    ``w`` has shape ``(C_in, C_out, 2, 2)``; each input pixel paints a 2x2
    output block. Without bias this is the adjoint of ``conv2d(., w,
    stride=2)`` read with ``w`` as ``(C_out', C_in', 2, 2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    _check4(x, "input")
    if w.ndim != 4 or w.shape[2:] != (2, 2) or w.shape[0] != x.shape[1]:
        raise ValueError(f"weight {w.shape} incompatible with input {x.shape}")
    n, _, h, wd = x.shape
    out = np.einsum("nchw,coab->nohawb", x, w, optimize=True)
    out = out.reshape(n, w.shape[1], 2 * h, 2 * wd)
    if b is not None:
        out = out + np.asarray(b, dtype=np.float64)[None, :, None, None]
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
