import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blindpnp.nn import (
    FULL_WIDTHS,
    SMALL_WIDTHS,
    NetGraph,
    WeightStore,
    build_cunet_denoiser,
    build_cunet_estimator,
    conv2d,
    conv_transpose2x2,
    convnext_block,
    count_params_closed_form,
    csam,
    load_weights,
    read_graph,
    relu,
    run_on_image,
    save_weights,
    sigmoid,
)
from oracles import conv2d_loops, tconv2x2_loops

TINY = (4, 4, 8, 8)


# -- primitives ----------------------------------------------------------------

@pytest.mark.parametrize(
    "cin, cout, k, stride, pad, groups",
    [(4, 3, 3, 1, 1, 1), (4, 4, 7, 1, 3, 4), (2, 6, 3, 1, 1, 2), (3, 5, 2, 2, 0, 1), (4, 8, 1, 1, 0, 1), (2, 4, 3, 2, 1, 2)],
)
def test_conv2d_matches_loops(cin, cout, k, stride, pad, groups, rng):
    x = rng.standard_normal((2, cin, 8, 6))
    w = rng.standard_normal((cout, cin // groups, k, k))
    b = rng.standard_normal(cout)
    got = conv2d(x, w, b, stride=stride, pad=pad, groups=groups)
    ref = conv2d_loops(x, w, b, stride, pad, groups)
    assert got.shape == ref.shape
    assert np.abs(got - ref).max() <= 1e-6


def test_conv2d_random_3x3_example(rng):
    x = rng.standard_normal((1, 4, 6, 6))
    w = rng.standard_normal((4, 4, 3, 3))
    assert np.abs(conv2d(x, w, pad=1) - conv2d_loops(x, w, pad=1)).max() <= 1e-6


def test_conv2d_identity_and_constant_cases(rng):
    x = rng.standard_normal((1, 3, 5, 5))
    np.testing.assert_array_equal(conv2d(x, np.eye(3)[:, :, None, None]), x)
    k = rng.random((3, 1, 7, 7))
    k /= k.sum(axis=(2, 3), keepdims=True)
    const = np.full((1, 3, 9, 9), 0.6)
    out = conv2d(const, k, groups=3)
    np.testing.assert_allclose(out, 0.6, atol=1e-14)


def test_conv2d_output_size_formula(rng):
    x = rng.standard_normal((1, 1, 9, 7))
    for k, s, p in [(3, 1, 1), (3, 2, 1), (2, 2, 0), (5, 3, 2)]:
        out = conv2d(x, np.ones((1, 1, k, k)), stride=s, pad=p)
        assert out.shape[2:] == ((9 + 2 * p - k) // s + 1, (7 + 2 * p - k) // s + 1)


def test_conv2d_shape_errors():
    with pytest.raises(ValueError):
        conv2d(np.zeros((1, 3, 4, 4)), np.zeros((2, 2, 3, 3)))
    with pytest.raises(ValueError):
        conv2d(np.zeros((3, 4, 4)), np.zeros((2, 3, 3, 3)))
    with pytest.raises(ValueError):
        conv2d(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 5, 5)))


def test_tconv_matches_loops(rng):
    x = rng.standard_normal((2, 3, 4, 5))
    w = rng.standard_normal((3, 2, 2, 2))
    b = rng.standard_normal(2)
    assert np.abs(conv_transpose2x2(x, w, b) - tconv2x2_loops(x, w, b)).max() <= 1e-6


def test_tconv_small_cases(rng):
    out = conv_transpose2x2(np.array([[[[0.7]]]]), np.ones((1, 1, 2, 2)))
    np.testing.assert_array_equal(out, np.full((1, 1, 2, 2), 0.7))
    assert np.all(conv_transpose2x2(rng.standard_normal((1, 2, 3, 3)), np.zeros((2, 4, 2, 2))) == 0)
    with pytest.raises(ValueError):
        conv_transpose2x2(np.zeros((1, 2, 3, 3)), np.zeros((3, 2, 2, 2)))


@given(st.integers(0, 2 ** 32 - 1))
def test_tconv_is_adjoint_of_strided_conv(seed):
    r = np.random.default_rng(seed)
    w = r.standard_normal((3, 2, 2, 2))  # conv: 2 -> 3 channels; tconv: 3 -> 2
    x = r.standard_normal((1, 2, 6, 8))
    y = r.standard_normal((1, 3, 3, 4))
    lhs = np.vdot(conv2d(x, w, stride=2), y)
    rhs = np.vdot(x, conv_transpose2x2(y, w))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_relu_and_sigmoid():
    x = np.array([-800.0, -1.0, 0.0, 2.0, 800.0])
    np.testing.assert_array_equal(relu(x), [0, 0, 0, 2, 800])
    s = sigmoid(x)
    assert np.all(np.isfinite(s))
    np.testing.assert_allclose(s, [0.0, 1 / (1 + np.e), 0.5, 1 / (1 + np.exp(-2)), 1.0], atol=1e-15)


# -- blocks -------------------------------------------------------------------

def _block_params(r, c, scale=1.0):
    return {
        "dw.weight": scale * r.standard_normal((c, 1, 7, 7)),
        "dw.bias": scale * r.standard_normal(c),
        "expand.weight": scale * r.standard_normal((4 * c, c, 1, 1)),
        "expand.bias": scale * r.standard_normal(4 * c),
        "project.weight": scale * r.standard_normal((c, 4 * c, 1, 1)),
        "project.bias": scale * r.standard_normal(c),
    }


def test_convnext_zero_weights_is_identity(rng):
    x = rng.standard_normal((1, 5, 8, 8))
    p = {k: np.zeros_like(v) for k, v in _block_params(rng, 5).items()}
    np.testing.assert_array_equal(convnext_block(x, p), x)


def test_convnext_zero_input_zero_bias(rng):
    p = _block_params(rng, 3)
    for k in p:
        if k.endswith("bias"):
            p[k] = np.zeros_like(p[k])
    assert np.all(convnext_block(np.zeros((1, 3, 8, 8)), p) == 0)


def test_convnext_matches_loop_composition(rng):
    c = 2
    p = _block_params(rng, c, 0.3)
    x = rng.standard_normal((1, c, 8, 8))
    t = conv2d_loops(x, p["dw.weight"], p["dw.bias"], 1, 3, c)
    t = np.maximum(conv2d_loops(t, p["expand.weight"], p["expand.bias"]), 0)
    ref = x + conv2d_loops(t, p["project.weight"], p["project.bias"])
    assert np.abs(convnext_block(x, p) - ref).max() <= 1e-6


def _csam_params(r, c_img, feat, scale=1.0):
    return {
        "to_image.weight": scale * r.standard_normal((c_img, feat, 1, 1)),
        "to_image.bias": scale * r.standard_normal(c_img),
        "from_image.weight": scale * r.standard_normal((feat, c_img, 1, 1)),
        "from_image.bias": scale * r.standard_normal(feat),
        "from_curv.weight": scale * r.standard_normal((feat, c_img, 1, 1)),
        "from_curv.bias": scale * r.standard_normal(feat),
    }


def test_csam_zero_image_head_returns_image(rng):
    p = _csam_params(rng, 3, 8)
    p["to_image.weight"][:] = 0
    p["to_image.bias"][:] = 0
    img = rng.standard_normal((1, 3, 4, 4))
    _, restored = csam(rng.standard_normal((1, 8, 4, 4)), img, rng.standard_normal((1, 3, 4, 4)), p)
    np.testing.assert_array_equal(restored, img)


def test_csam_closed_gate_passes_features(rng):
    p = _csam_params(rng, 1, 8)
    p["from_image.weight"][:] = 0
    p["from_curv.weight"][:] = 0
    p["from_image.bias"][:] = -1e4
    feat = rng.standard_normal((1, 8, 4, 4))
    refined, _ = csam(feat, rng.standard_normal((1, 1, 4, 4)), rng.standard_normal((1, 1, 4, 4)), p)
    np.testing.assert_allclose(refined, feat, atol=1e-12)


def test_csam_matches_step_by_step_reference(rng):
    p = _csam_params(rng, 1, 8, 0.5)
    feat, img, curv = (rng.standard_normal((1, ch, 4, 4)) for ch in (8, 1, 1))
    restored = img + conv2d_loops(feat, p["to_image.weight"], p["to_image.bias"])
    cgate = 1 / (1 + np.exp(-conv2d_loops(curv, p["from_curv.weight"], p["from_curv.bias"])))
    gate = 1 / (1 + np.exp(-(conv2d_loops(restored, p["from_image.weight"], p["from_image.bias"]) + cgate)))
    refined_ref = feat * gate + feat
    refined, rest = csam(feat, img, curv, p)
    assert np.abs(rest - restored).max() <= 1e-6
    assert np.abs(refined - refined_ref).max() <= 1e-6
    with pytest.raises(ValueError):
        csam(feat, img[:, :, :2], curv, p)


# -- graphs -------------------------------------------------------------------

@pytest.mark.parametrize("widths", [SMALL_WIDTHS, FULL_WIDTHS])
@pytest.mark.parametrize("c", [1, 3])
def test_graphs_shape_check(widths, c):
    den = build_cunet_denoiser(widths, 2 * c + 1)
    out = den.output_shapes((1, 2 * c + 1, 64, 64))
    assert out["image"] == (1, c, 64, 64)
    assert out["sam"] == (1, c, 64, 64)
    est = build_cunet_estimator(widths, c)
    assert est.output_shapes((1, c, 64, 64)) == {"level": (1, c, 64, 64), "noise": (1, c, 64, 64)}


def test_graph_validation():
    with pytest.raises(ValueError):
        build_cunet_denoiser(SMALL_WIDTHS, 4)
    with pytest.raises(ValueError):
        NetGraph("denoiser", 1, (32, 64, 128))
    with pytest.raises(ValueError):
        NetGraph("segmenter", 1, SMALL_WIDTHS)
    with pytest.raises(ValueError):
        build_cunet_denoiser(TINY, 3).output_shapes((1, 3, 12, 16))


# frozen parameter counts, reproduced by walking the layer list and by the
# closed-form width formula
PARAM_COUNTS = {
    ("denoiser", 1, SMALL_WIDTHS): 3974370,
    ("denoiser", 3, SMALL_WIDTHS): 3976294,
    ("estimator", 1, SMALL_WIDTHS): 3973922,
    ("denoiser", 3, FULL_WIDTHS): 34833702,
}


@pytest.mark.parametrize("key", list(PARAM_COUNTS))
def test_parameter_count_double_count(key):
    kind, c, widths = key
    g = NetGraph(kind, c, widths)
    walked = sum(int(np.prod(s)) for s in g.param_shapes().values())
    assert walked == count_params_closed_form(kind, widths, c) == g.num_params() == PARAM_COUNTS[key]


def test_estimator_zero_weights_heads_zero(rng):
    g = build_cunet_estimator(TINY, 1, blocks=1).zero_weights()
    out = g.forward(rng.standard_normal((1, 1, 16, 16)))
    assert all(np.all(v == 0) for v in out.values())


@pytest.mark.parametrize("seed", range(3))
def test_random_init_forward_is_finite_and_deterministic(seed, rng):
    g = build_cunet_denoiser(TINY, 3, blocks=2).init_weights(seed)
    x = rng.standard_normal((1, 3, 16, 24))
    a, b = g.forward(x), g.forward(x)
    assert all(np.all(np.isfinite(v)) for v in a.values())
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()


def test_forward_without_weights():
    with pytest.raises(RuntimeError):
        build_cunet_denoiser(TINY, 3).forward(np.zeros((1, 3, 8, 8)))


def test_translation_equivariance_on_periodic_input():
    g = build_cunet_denoiser(TINY, 3, blocks=1).init_weights(3)
    r = np.random.default_rng(0)
    # a periodic image: tile one period so the shifted copy stays consistent
    x = np.tile(r.random((1, 3, 16, 16)), (1, 1, 12, 12))
    shift = 8
    a = g.forward(np.roll(x, (shift, shift), axis=(2, 3)))["image"]
    b = np.roll(g.forward(x)["image"], (shift, shift), axis=(2, 3))
    # zero padding at the borders leaks inward through the receptive field;
    # 80 px is where the difference vanishes for this depth
    m = 80
    np.testing.assert_allclose(a[:, :, m:-m, m:-m], b[:, :, m:-m, m:-m], atol=1e-12)


def test_run_on_image_pads_and_crops(rng):
    g = build_cunet_denoiser(TINY, 7, blocks=1).init_weights(0)
    out = run_on_image(g, rng.random((37, 53, 7)))
    assert out["image"].shape == (37, 53, 3)
    with pytest.raises(ValueError):
        run_on_image(g, rng.random((37, 53, 3)))


# -- weight files ---------------------------------------------------------------

def test_weight_round_trip_bitwise(tmp_path):
    g = build_cunet_denoiser(TINY, 3, blocks=1, residual=True).init_weights(5)
    save_weights(g, tmp_path / "w.bin")
    back = read_graph(tmp_path / "w.bin")
    assert back.residual and back.widths == g.widths and back.blocks == 1
    for k, v in g.weights.items():
        assert back.weights[k].tobytes() == v.tobytes()
    save_weights(back, tmp_path / "w2.bin")
    assert (tmp_path / "w.bin").read_bytes() == (tmp_path / "w2.bin").read_bytes()


def test_missing_and_extra_tensors_are_named(tmp_path):
    g = build_cunet_denoiser(TINY, 3, blocks=1).init_weights(0)
    store = WeightStore.from_graph(g)
    del store.tensors["tail.bias"]
    store.tensors["bogus.weight"] = np.zeros(3, np.float32)
    with pytest.raises(ValueError) as err:
        load_weights(g, store)
    assert "tail.bias" in str(err.value) and "bogus.weight" in str(err.value)


def test_shape_mismatch_is_reported():
    g = build_cunet_denoiser(TINY, 3, blocks=1).init_weights(0)
    w = dict(g.weights)
    w["head.bias"] = np.zeros(5, np.float32)
    with pytest.raises(ValueError, match="head.bias"):
        g.with_weights(w)


def test_non_f32_dtype_rejected(tmp_path):
    import json
    import struct

    g = build_cunet_denoiser(TINY, 3, blocks=1).init_weights(0)
    save_weights(g, tmp_path / "w.bin")
    raw = (tmp_path / "w.bin").read_bytes()
    n = struct.unpack("<Q", raw[8:16])[0]
    man = json.loads(raw[16:16 + n])
    man["tensors"][0]["dtype"] = "<f8"
    blob = json.dumps(man).encode()
    (tmp_path / "bad.bin").write_bytes(raw[:8] + struct.pack("<Q", len(blob)) + blob + raw[16 + n:])
    with pytest.raises(ValueError, match="only"):
        read_graph(tmp_path / "bad.bin")
    (tmp_path / "junk.bin").write_bytes(b"notaweightfile")
    with pytest.raises(ValueError):
        read_graph(tmp_path / "junk.bin")
    with pytest.raises(ValueError):
        WeightStore({"a": np.zeros(2)}, {}).write(tmp_path / "f64.bin")
