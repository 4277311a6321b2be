import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blindpnp.image import circular_shift
from blindpnp.metrics import (
    crop_border,
    evaluate,
    format_table,
    mean_row,
    psnr,
    psnr_y,
    relative_change,
    ssim,
    write_csv,
)
from oracles import psnr_scalar, ssim_loops


def test_psnr_uniform_offset_is_twenty_db():
    a = np.full((8, 8, 1), 0.3)
    assert psnr(a + 0.1, a) == pytest.approx(20.0, abs=1e-9)


def test_psnr_identical_is_inf():
    a = np.full((4, 4, 3), 0.2)
    assert psnr(a, a) == math.inf


def test_psnr_matches_scalar_oracle(rng):
    a, b = rng.random((9, 7, 3)), rng.random((9, 7, 3))
    assert psnr(a, b) == pytest.approx(psnr_scalar(a, b), abs=1e-10)
    assert psnr(a, b, peak=255) == pytest.approx(psnr_scalar(a, b, 255), abs=1e-10)


def test_psnr_y_on_gray_equals_psnr(rng):
    a, b = rng.random((6, 6, 1)), rng.random((6, 6, 1))
    assert psnr_y(a, b) == psnr(a, b)


def test_psnr_y_ignores_chroma_only_error():
    a = np.full((6, 6, 3), 0.5)
    b = a.copy()
    # (0.299, 0.587, 0.114) . (d_r, d_g, d_b) = 0 keeps luma fixed
    b[..., 0] += 0.114 * 0.1
    b[..., 2] -= 0.299 * 0.1
    assert psnr_y(a, b) > 100
    assert psnr(a, b) < 60


def test_ssim_matches_window_oracle(rng):
    a = rng.random((20, 17))
    b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0, 1)
    assert ssim(a, b) == pytest.approx(ssim_loops(a, b), abs=1e-6)


def test_ssim_color_is_channel_mean(rng):
    a, b = rng.random((14, 14, 3)), rng.random((14, 14, 3))
    expect = np.mean([ssim_loops(a[..., c], b[..., c]) for c in range(3)])
    assert ssim(a, b) == pytest.approx(expect, abs=1e-6)


def test_ssim_self_and_complement(rng):
    a = rng.random((16, 16, 1))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert ssim(a, 1 - a) < 1.0


imgs = arrays(np.float64, st.tuples(st.integers(11, 16), st.integers(11, 16)), elements=st.floats(0, 1))


@given(imgs, imgs)
def test_ssim_symmetric_and_bounded(a, b):
    if a.shape != b.shape:
        b = np.resize(b, a.shape)
    s = ssim(a, b)
    assert s == pytest.approx(ssim(b, a), abs=1e-12)
    assert s <= 1 + 1e-12


@given(imgs, imgs, st.integers(-20, 20), st.integers(-20, 20))
def test_psnr_symmetric_and_shift_invariant(a, b, dy, dx):
    if a.shape != b.shape:
        b = np.resize(b, a.shape)
    if np.array_equal(a, b):
        b = 1 - a
    p = psnr(a, b)
    assert psnr(b, a) == p
    assert psnr(circular_shift(a, dy, dx), circular_shift(b, dy, dx)) == pytest.approx(p, rel=1e-12)


def test_psnr_and_ssim_decrease_with_noise(rng):
    a = np.clip(np.cumsum(rng.random((40, 40)), axis=1) / 40, 0, 1)
    n = rng.standard_normal(a.shape)
    grid = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3)
    ps = [psnr(a + s * n, a) for s in grid]
    ss = [ssim(a, a + s * n) for s in grid]
    assert all(x > y for x, y in zip(ps, ps[1:]))
    assert all(x > y for x, y in zip(ss, ss[1:]))


def test_shape_errors(rng):
    with pytest.raises(ValueError, match="shape"):
        psnr(rng.random((4, 4)), rng.random((4, 5)))
    with pytest.raises(ValueError, match="shape"):
        ssim(rng.random((12, 12)), rng.random((12, 13)))
    with pytest.raises(ValueError, match="window"):
        ssim(rng.random((10, 30)), rng.random((10, 30)))


def test_relative_change():
    assert relative_change(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 0.0
    assert relative_change(np.array([3.0, 4.0]), np.zeros(2)) == 1.0
    assert relative_change(np.zeros(2), np.zeros(2)) == 0.0
    assert relative_change(np.zeros(2), np.ones(2)) == math.inf


def test_crop_border_and_evaluate(rng):
    a = rng.random((30, 30, 3))
    assert crop_border(a, 4).shape == (22, 22, 3)
    assert crop_border(a, 0) is a
    b = a.copy()
    b[:2] = 0  # damage only inside the border
    rep = evaluate("x", b, a, border=2)
    assert rep.psnr_rgb == math.inf and rep.ssim == pytest.approx(1.0)
    assert evaluate("g", a[..., :1], a[..., :1]).psnr_y is None


def test_mean_row_and_csv_and_table():
    rows = [
        {"image": "a", "cell": "c", "psnr": 20.0, "iters": 3, "y": None},
        {"image": "b", "cell": "c", "psnr": 30.0, "iters": 5, "y": None},
    ]
    m = mean_row(rows)
    assert m == {"image": "mean", "cell": "c", "psnr": 25.0, "iters": 4.0, "y": None}
    buf = io.StringIO()
    write_csv(rows + [m], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "image,cell,psnr,iters,y"
    assert lines[-1] == "mean,c,25,4,"
    table = format_table(rows)
    assert table.splitlines()[0].split() == ["image", "cell", "psnr", "iters", "y"]
    assert "20.0000" in table
    with pytest.raises(ValueError):
        mean_row([])
    assert format_table([]) == ""
