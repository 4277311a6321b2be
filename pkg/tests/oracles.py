"""Slow, independent reference implementations used only by the tests.

Each oracle takes a different route from the library code it checks:
explicit loops, dense matrices or scalar formulas, never the same
vectorized path.
"""

import math

import numpy as np


def conv_circular_loops(img, k):
    """Periodic convolution by explicit summation over every pixel and tap."""
    h, w, c = img.shape
    kh, kw = k.shape
    ch, cw = kh // 2, kw // 2
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            for u in range(-ch, ch + 1):
                for v in range(-cw, cw + 1):
                    out[i, j] += k[u + ch, v + cw] * img[(i - u) % h, (j - v) % w]
    return out


def circulant_matrix(k, h, w):
    """Dense (hw x hw) matrix of periodic convolution, built column by column."""
    n = h * w
    A = np.zeros((n, n))
    for idx in range(n):
        e = np.zeros((h, w, 1))
        e[idx // w, idx % w, 0] = 1.0
        A[:, idx] = conv_circular_loops(e, k)[:, :, 0].ravel()
    return A


def selection_matrix(h, w, s):
    rows = []
    for i in range(0, h, s):
        for j in range(0, w, s):
            r = np.zeros(h * w)
            r[i * w + j] = 1.0
            rows.append(r)
    return np.array(rows)


def normal_eq_solve(M, y, v, data_w, prior_w):
    """Solve (data_w M^T M + prior_w I) x = data_w M^T y + prior_w v per channel
    with numpy's generic solver."""
    n = M.shape[1]
    lhs = data_w * M.T @ M + prior_w * np.eye(n)
    out = []
    for c in range(v.shape[2]):
        rhs = data_w * M.T @ y[:, :, c].ravel() + prior_w * v[:, :, c].ravel()
        out.append(np.linalg.solve(lhs, rhs))
    return np.stack(out, axis=1).reshape(v.shape)


def cubic_weight(t, a=-0.5):
    t = abs(t)
    if t <= 1:
        return (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1
    if t < 2:
        return a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a
    return 0.0


def bicubic_pixelwise(img, s):
    """Per-output-pixel 4x4 kernel sum with replicate boundary."""
    h, w, c = img.shape
    out = np.zeros((h * s, w * s, c))
    for I in range(h * s):
        sy = (I + 0.5) / s - 0.5
        for J in range(w * s):
            sx = (J + 0.5) / s - 0.5
            acc = np.zeros(c)
            for m in range(math.floor(sy) - 1, math.floor(sy) + 3):
                for n in range(math.floor(sx) - 1, math.floor(sx) + 3):
                    wgt = cubic_weight(sy - m) * cubic_weight(sx - n)
                    acc += wgt * img[min(max(m, 0), h - 1), min(max(n, 0), w - 1)]
            out[I, J] = acc
    return out


def conv2d_loops(x, w, b=None, stride=1, pad=0, groups=1):
    """NCHW cross-correlation with zero padding by explicit loops."""
    n, cin, h, wd = x.shape
    cout, cin_g, kh, kw = w.shape
    xp = np.zeros((n, cin, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, cout, oh, ow))
    cout_g = cout // groups
    for bi in range(n):
        for o in range(cout):
            g = o // cout_g
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for ci in range(cin_g):
                        for u in range(kh):
                            for v in range(kw):
                                acc += w[o, ci, u, v] * xp[bi, g * cin_g + ci, i * stride + u, j * stride + v]
                    out[bi, o, i, j] = acc + (0.0 if b is None else b[o])
    return out


def tconv2x2_loops(x, w, b=None):
    """Transposed 2x2 stride-2 convolution: scatter every input pixel."""
    n, cin, h, wd = x.shape
    cout = w.shape[1]
    out = np.zeros((n, cout, 2 * h, 2 * wd))
    for bi in range(n):
        for ci in range(cin):
            for i in range(h):
                for j in range(wd):
                    for o in range(cout):
                        for a in range(2):
                            for c in range(2):
                                out[bi, o, 2 * i + a, 2 * j + c] += x[bi, ci, i, j] * w[ci, o, a, c]
    if b is not None:
        out += np.asarray(b)[None, :, None, None]
    return out


def ssim_loops(a, b, win=11, std=1.5, k1=0.01, k2=0.03, peak=1.0):
    """Gray SSIM by visiting every valid window with a 2-D Gaussian."""
    r = np.arange(win) - win // 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2 * std * std))
    g /= g.sum()
    c1, c2 = (k1 * peak) ** 2, (k2 * peak) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - win + 1):
        for j in range(w - win + 1):
            pa = a[i:i + win, j:j + win]
            pb = b[i:i + win, j:j + win]
            ma, mb = (g * pa).sum(), (g * pb).sum()
            va = (g * (pa - ma) ** 2).sum()
            vb = (g * (pb - mb) ** 2).sum()
            cov = (g * (pa - ma) * (pb - mb)).sum()
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def psnr_scalar(a, b, peak=1.0):
    fa, fb = np.ravel(a), np.ravel(b)
    mse = sum((float(p) - float(q)) ** 2 for p, q in zip(fa, fb)) / len(fa)
    return 10 * math.log10(peak ** 2 / mse)


def dft2_loops(x):
    """Naive 2-D DFT by direct summation."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for i in range(h):
                for j in range(w):
                    acc += x[i, j] * np.exp(-2j * np.pi * (u * i / h + v * j / w))
            out[u, v] = acc
    return out
