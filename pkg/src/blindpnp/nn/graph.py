"""Curvature-aware U-Net encoder-decoder graphs for noise estimation and denoising.

Topology (both subnetworks)::

    head 3x3 conv
    3 x [ConvNeXt blocks -> 2x2 stride-2 conv]       encoder, skips saved
    ConvNeXt blocks                                  bottleneck
    3 x [2x2 transposed conv -> add skip -> blocks]  decoder
    tail 3x3 conv

The denoiser inserts the curvature supervised attention module (CSAM)
after the skip addition of the full-resolution decoder stage. A ConvNeXt
block here is ``x + project(relu(expand(dw7x7(x))))`` with a 4x inverted
bottleneck and no normalization.

Denoiser input channels are ``[image (C) | curvature (C) | level (1)]``;
the estimator reads the image alone and emits a noise-level map and a
noise-distribution map, each with ``C`` channels.

The topology is written once against an ``ops`` object. :class:`_ShapeOps`
propagates shapes and checks every declared parameter, which is how graphs
are validated at build time without allocating weights.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import ops as F

__all__ = [
    "Layer",
    "NetGraph",
    "FULL_WIDTHS",
    "SMALL_WIDTHS",
    "build_cunet_denoiser",
    "build_cunet_estimator",
    "convnext_block",
    "csam",
    "count_params_closed_form",
    "run_on_image",
    "pad_multiple",
]

FULL_WIDTHS = (96, 192, 384, 768)
SMALL_WIDTHS = (32, 64, 128, 256)
DEFAULT_BLOCKS = 4
EXPANSION = 4
DW_KERNEL = 7
MULTIPLE = 8


@dataclasses.dataclass(frozen=True)
class Layer:
    name: str
    kind: str  # "conv" or "tconv"
    cin: int
    cout: int
    k: int
    stride: int = 1
    pad: int = 0
    groups: int = 1

    @property
    def weight_shape(self) -> tuple:
        if self.kind == "tconv":
            return (self.cin, self.cout, self.k, self.k)
        return (self.cout, self.cin // self.groups, self.k, self.k)

    def param_shapes(self) -> dict:
        return {f"{self.name}.weight": self.weight_shape, f"{self.name}.bias": (self.cout,)}


def _conv(name, cin, cout, k, stride=1, groups=1) -> Layer:
    pad = k // 2 if k % 2 else 0
    return Layer(name, "conv", cin, cout, k, stride, pad, groups)


def _convnext_layers(prefix: str, c: int) -> list:
    return [
        _conv(f"{prefix}.dw", c, c, DW_KERNEL, groups=c),
        _conv(f"{prefix}.expand", c, EXPANSION * c, 1),
        _conv(f"{prefix}.project", EXPANSION * c, c, 1),
    ]


def _csam_layers(prefix: str, c_img: int, feat: int) -> list:
    return [
        _conv(f"{prefix}.to_image", feat, c_img, 1),
        _conv(f"{prefix}.from_image", c_img, feat, 1),
        _conv(f"{prefix}.from_curv", c_img, feat, 1),
    ]


class _NumericOps:
    def __init__(self, layers: dict, weights: dict):
        self.layers = layers
        self.weights = weights

    def _wb(self, name):
        return self.weights[f"{name}.weight"], self.weights[f"{name}.bias"]

    def conv(self, x, name):
        lay = self.layers[name]
        w, b = self._wb(name)
        return F.conv2d(x, w, b, stride=lay.stride, pad=lay.pad, groups=lay.groups)

    def tconv(self, x, name):
        w, b = self._wb(name)
        return F.conv_transpose2x2(x, w, b)

    relu = staticmethod(F.relu)
    sigmoid = staticmethod(F.sigmoid)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def channels(x, start, stop):
        return x[:, start:stop]

    @staticmethod
    def split(x, sizes):
        return np.split(x, np.cumsum(sizes)[:-1], axis=1)


class _ShapeOps:
    """Shape-only twin of :class:`_NumericOps`; tensors are 4-tuples."""

    def __init__(self, layers: dict):
        self.layers = layers

    def conv(self, x, name):
        lay = self.layers[name]
        n, c, h, w = x
        if c != lay.cin:
            raise ValueError(f"{name}: expects {lay.cin} channels, got {c}")
        ho = (h + 2 * lay.pad - lay.k) // lay.stride + 1
        wo = (w + 2 * lay.pad - lay.k) // lay.stride + 1
        if ho < 1 or wo < 1:
            raise ValueError(f"{name}: input {h}x{w} too small")
        if lay.stride > 1 and (h % lay.stride or w % lay.stride):
            raise ValueError(f"{name}: {h}x{w} not divisible by stride {lay.stride}")
        return (n, lay.cout, ho, wo)

    def tconv(self, x, name):
        lay = self.layers[name]
        n, c, h, w = x
        if c != lay.cin:
            raise ValueError(f"{name}: expects {lay.cin} channels, got {c}")
        return (n, lay.cout, 2 * h, 2 * w)

    @staticmethod
    def relu(x):
        return x

    sigmoid = relu

    @staticmethod
    def add(a, b):
        if a != b:
            raise ValueError(f"cannot combine shapes {a} and {b}")
        return a

    mul = add

    @staticmethod
    def channels(x, start, stop):
        n, c, h, w = x
        if not 0 <= start < stop <= c:
            raise ValueError(f"channel slice {start}:{stop} out of range for {c}")
        return (n, stop - start, h, w)

    @staticmethod
    def split(x, sizes):
        n, c, h, w = x
        if sum(sizes) != c:
            raise ValueError(f"cannot split {c} channels into {sizes}")
        return [(n, k, h, w) for k in sizes]


def _convnext(ops, x, prefix):
    t = ops.conv(x, f"{prefix}.dw")
    t = ops.relu(ops.conv(t, f"{prefix}.expand"))
    return ops.add(x, ops.conv(t, f"{prefix}.project"))


def _csam(ops, feat, image, curv, prefix):
    restored = ops.add(image, ops.conv(feat, f"{prefix}.to_image"))
    curv_gate = ops.sigmoid(ops.conv(curv, f"{prefix}.from_curv"))
    gate = ops.sigmoid(ops.add(ops.conv(restored, f"{prefix}.from_image"), curv_gate))
    return ops.add(ops.mul(feat, gate), feat), restored


@dataclasses.dataclass(frozen=True)
class NetGraph:
    """An immutable U-Net definition, optionally bound to weights.

    ``weights`` maps parameter names to float32 arrays; ``residual`` makes
    the denoiser add its image input to the tail output.
    """

    kind: str  # "denoiser" or "estimator"
    image_channels: int
    widths: tuple
    blocks: int = DEFAULT_BLOCKS
    residual: bool = False
    weights: dict | None = dataclasses.field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("denoiser", "estimator"):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.image_channels not in (1, 3):
            raise ValueError("image_channels must be 1 or 3")
        if len(self.widths) != 4 or any(int(w) != w or w < 1 for w in self.widths):
            raise ValueError(f"need 4 positive integer widths, got {self.widths}")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "_layers", {lay.name: lay for lay in self._build_layers()})
        self.output_shapes((1, self.in_channels, MULTIPLE, MULTIPLE))

    @property
    def in_channels(self) -> int:
        c = self.image_channels
        return 2 * c + 1 if self.kind == "denoiser" else c

    @property
    def heads(self) -> tuple:
        return ("image", "sam") if self.kind == "denoiser" else ("level", "noise")

    @property
    def layers(self) -> dict:
        return self._layers

    def _build_layers(self) -> list:
        w, c, nb = self.widths, self.image_channels, self.blocks
        out = [_conv("head", self.in_channels, w[0], 3)]
        for lvl in range(3):
            for b in range(nb):
                out += _convnext_layers(f"enc{lvl}.block{b}", w[lvl])
            out.append(_conv(f"down{lvl}", w[lvl], w[lvl + 1], 2, stride=2))
        for b in range(nb):
            out += _convnext_layers(f"mid.block{b}", w[3])
        for lvl in (2, 1, 0):
            out.append(Layer(f"up{lvl}", "tconv", w[lvl + 1], w[lvl], 2))
            if lvl == 0 and self.kind == "denoiser":
                out += _csam_layers("csam", c, w[0])
            for b in range(nb):
                out += _convnext_layers(f"dec{lvl}.block{b}", w[lvl])
        tail_out = c if self.kind == "denoiser" else 2 * c
        out.append(_conv("tail", w[0], tail_out, 3))
        return out

    def param_shapes(self) -> dict:
        shapes = {}
        for lay in self._layers.values():
            shapes.update(lay.param_shapes())
        return shapes

    def num_params(self) -> int:
        return sum(math.prod(s) for s in self.param_shapes().values())

    def _run(self, ops, x):
        c, nb = self.image_channels, self.blocks
        h = ops.conv(x, "head")
        skips = []
        for lvl in range(3):
            for b in range(nb):
                h = _convnext(ops, h, f"enc{lvl}.block{b}")
            skips.append(h)
            h = ops.conv(h, f"down{lvl}")
        for b in range(nb):
            h = _convnext(ops, h, f"mid.block{b}")
        restored = None
        for lvl in (2, 1, 0):
            h = ops.add(ops.tconv(h, f"up{lvl}"), skips[lvl])
            if lvl == 0 and self.kind == "denoiser":
                image = ops.channels(x, 0, c)
                curv = ops.channels(x, c, 2 * c)
                h, restored = _csam(ops, h, image, curv, "csam")
            for b in range(nb):
                h = _convnext(ops, h, f"dec{lvl}.block{b}")
        out = ops.conv(h, "tail")
        if self.kind == "denoiser":
            if self.residual:
                out = ops.add(out, ops.channels(x, 0, c))
            return {"image": out, "sam": restored}
        level, noise = ops.split(out, [c, c])
        return {"level": level, "noise": noise}

    def output_shapes(self, in_shape) -> dict:
        """Propagate ``in_shape`` through the graph, checking every layer."""
        in_shape = tuple(int(v) for v in in_shape)
        if len(in_shape) != 4 or in_shape[1] != self.in_channels:
            raise ValueError(
                f"input must be (N, {self.in_channels}, H, W), got {in_shape}"
            )
        return self._run(_ShapeOps(self._layers), in_shape)

    def init_weights(self, seed: int = 0, scale: float = 1.0) -> "NetGraph":
        """Return a copy bound to seeded fan-in-scaled uniform weights."""
        rng = np.random.Generator(np.random.Philox(int(seed)))
        weights = {}
        for lay in self._layers.values():
            # a transposed 2x2/stride-2 output pixel sees one tap per input channel
            fan_in = lay.cin if lay.kind == "tconv" else lay.weight_shape[1] * lay.k * lay.k
            bound = scale / math.sqrt(fan_in)
            for name, shape in lay.param_shapes().items():
                weights[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
        return dataclasses.replace(self, weights=weights)

    def zero_weights(self) -> "NetGraph":
        weights = {n: np.zeros(s, dtype=np.float32) for n, s in self.param_shapes().items()}
        return dataclasses.replace(self, weights=weights)

    def with_weights(self, weights: dict, residual: bool | None = None) -> "NetGraph":
        expected = self.param_shapes()
        missing = sorted(set(expected) - set(weights))
        extra = sorted(set(weights) - set(expected))
        bad = sorted(
            f"{n}: expected {expected[n]}, got {tuple(weights[n].shape)}"
            for n in set(expected) & set(weights)
            if tuple(weights[n].shape) != tuple(expected[n])
        )
        if missing or extra or bad:
            parts = []
            if missing:
                parts.append("missing: " + ", ".join(missing))
            if extra:
                parts.append("unexpected: " + ", ".join(extra))
            if bad:
                parts.append("shape mismatch: " + "; ".join(bad))
            raise ValueError("weights do not match graph; " + " | ".join(parts))
        res = self.residual if residual is None else bool(residual)
        return dataclasses.replace(self, weights=dict(weights), residual=res)

    def forward(self, x: np.ndarray) -> dict:
        """Execute on a ``(N, C_in, H, W)`` array; H and W multiples of 8."""
        if self.weights is None:
            raise RuntimeError("graph has no weights bound")
        x = np.asarray(x, dtype=np.float64)
        self.output_shapes(x.shape)
        weights = {k: v.astype(np.float64) for k, v in self.weights.items()}
        out = self._run(_NumericOps(self._layers, weights), x)
        for name, val in out.items():
            if not np.all(np.isfinite(val)):
                raise FloatingPointError(f"non-finite values in head {name!r}")
        return out


def _block_count(c: int) -> int:
    # dw 7x7 + bias, expand 1x1 + bias, project 1x1 + bias
    return c * DW_KERNEL ** 2 + c + 2 * EXPANSION * c * c + EXPANSION * c + c


def count_params_closed_form(kind: str, widths, image_channels: int, blocks: int = DEFAULT_BLOCKS) -> int:
    """Parameter count from widths alone, without building a graph."""
    w, c = widths, image_channels
    cin = 2 * c + 1 if kind == "denoiser" else c
    total = 9 * cin * w[0] + w[0]
    for lvl in range(3):
        total += 2 * blocks * _block_count(w[lvl])  # encoder + decoder
        total += 4 * w[lvl] * w[lvl + 1] + w[lvl + 1]  # down
        total += 4 * w[lvl + 1] * w[lvl] + w[lvl]  # up
    total += blocks * _block_count(w[3])
    if kind == "denoiser":
        total += (w[0] * c + c) + 2 * (c * w[0] + w[0])
        total += 9 * w[0] * c + c
    else:
        total += 9 * w[0] * 2 * c + 2 * c
    return total


def convnext_block(x: np.ndarray, params: dict) -> np.ndarray:
    """One ConvNeXt block; ``params`` keys are ``dw|expand|project.weight|bias``."""
    c = np.asarray(params["dw.weight"]).shape[0]
    layers = {lay.name: lay for lay in _convnext_layers("b", c)}
    weights = {f"b.{k}": np.asarray(v, dtype=np.float64) for k, v in params.items()}
    return _convnext(_NumericOps(layers, weights), np.asarray(x, dtype=np.float64), "b")


def csam(features, image, curvature, params: dict):
    """Curvature supervised attention; returns ``(refined, restored)``.

    ``params`` keys are ``to_image|from_image|from_curv.weight|bias``.
    """
    to_img = np.asarray(params["to_image.weight"])
    layers = {lay.name: lay for lay in _csam_layers("s", to_img.shape[0], to_img.shape[1])}
    weights = {f"s.{k}": np.asarray(v, dtype=np.float64) for k, v in params.items()}
    ops = _NumericOps(layers, weights)
    f, i, c = (np.asarray(a, dtype=np.float64) for a in (features, image, curvature))
    if not f.shape[2:] == i.shape[2:] == c.shape[2:]:
        raise ValueError(f"spatial sizes differ: {f.shape}, {i.shape}, {c.shape}")
    return _csam(ops, f, i, c, "s")


def pad_multiple(img: np.ndarray, multiple: int = MULTIPLE):
    """Reflect-pad an ``(H, W, C)`` image up to multiples of ``multiple``."""
    h, w = img.shape[:2]
    ph, pw = (-h) % multiple, (-w) % multiple
    mode = "reflect" if ph < h and pw < w else "symmetric"
    return np.pad(img, ((0, ph), (0, pw), (0, 0)), mode=mode), (h, w)


def run_on_image(graph: NetGraph, inputs: np.ndarray) -> dict:
    """Run ``graph`` on an ``(H, W, C_in)`` array; heads come back ``(H, W, C)``."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3 or inputs.shape[2] != graph.in_channels:
        raise ValueError(
            f"graph expects (H, W, {graph.in_channels}) input, got {inputs.shape}"
        )
    padded, (h, w) = pad_multiple(inputs)
    out = graph.forward(padded.transpose(2, 0, 1)[None])
    return {k: v[0].transpose(1, 2, 0)[:h, :w] for k, v in out.items()}


def build_cunet_denoiser(widths=FULL_WIDTHS, in_channels: int = 3, blocks: int = DEFAULT_BLOCKS,
                         residual: bool = False) -> NetGraph:
    """Denoising subnetwork for ``in_channels = 2 C + 1``."""
    if in_channels not in (3, 7):
        raise ValueError(f"denoiser in_channels must be 3 (gray) or 7 (color), got {in_channels}")
    return NetGraph("denoiser", (in_channels - 1) // 2, tuple(widths), blocks, residual)


def build_cunet_estimator(widths=FULL_WIDTHS, in_channels: int = 1, blocks: int = DEFAULT_BLOCKS) -> NetGraph:
    """Noise-estimation subnetwork with ``level`` and ``noise`` heads."""
    return NetGraph("estimator", in_channels, tuple(widths), blocks)
