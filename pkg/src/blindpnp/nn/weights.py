"""Single-file weight store.

Layout::

    8 bytes   magic b"BPNPWTS1"
    8 bytes   manifest length M, unsigned little-endian
    M bytes   UTF-8 JSON manifest
    rest      concatenated little-endian float32 tensors, C order

Manifest::

    {"version": 1,
     "meta": {"kind": "denoiser", "image_channels": 1,
              "widths": [32, 64, 128, 256], "blocks": 4, "residual": false},
     "tensors": [{"name": "head.weight", "dtype": "<f4",
                  "shape": [32, 3, 3, 3], "offset": 0}, ...]}

``offset`` counts bytes from the start of the blob section. ``meta`` is
free-form apart from ``residual``, which selects whether the denoiser
predicts the clean image directly (false) or a correction added to its
input (true).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import struct

import numpy as np

from .graph import NetGraph

__all__ = ["MAGIC", "WeightStore", "load_weights", "save_weights", "read_graph"]

MAGIC = b"BPNPWTS1"
DTYPE = "<f4"


@dataclasses.dataclass
class WeightStore:
    tensors: dict
    meta: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def from_graph(cls, graph: NetGraph) -> "WeightStore":
        if graph.weights is None:
            raise ValueError("graph has no weights bound")
        meta = {
            "kind": graph.kind,
            "image_channels": graph.image_channels,
            "widths": list(graph.widths),
            "blocks": graph.blocks,
            "residual": graph.residual,
        }
        return cls({k: graph.weights[k] for k in graph.param_shapes()}, meta)

    def write(self, path) -> None:
        entries, offset = [], 0
        for name, arr in self.tensors.items():
            arr = np.asarray(arr)
            if arr.dtype != np.float32:
                raise ValueError(f"{name}: only float32 tensors are stored, got {arr.dtype}")
            entries.append({"name": name, "dtype": DTYPE, "shape": list(arr.shape), "offset": offset})
            offset += arr.size * 4
        manifest = json.dumps({"version": 1, "meta": self.meta, "tensors": entries}).encode()
        with open(os.fspath(path), "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(manifest)))
            fh.write(manifest)
            for arr in self.tensors.values():
                fh.write(np.ascontiguousarray(arr, dtype=DTYPE).tobytes())

    @classmethod
    def read(cls, path) -> "WeightStore":
        with open(os.fspath(path), "rb") as fh:
            raw = fh.read()
        if raw[:8] != MAGIC:
            raise ValueError(f"{path}: not a weight store (bad magic)")
        (mlen,) = struct.unpack("<Q", raw[8:16])
        manifest = json.loads(raw[16 : 16 + mlen].decode())
        blob = memoryview(raw)[16 + mlen :]
        tensors = {}
        for ent in manifest["tensors"]:
            if ent.get("dtype") != DTYPE:
                raise ValueError(f"{path}: tensor {ent['name']} has dtype {ent.get('dtype')!r}; only {DTYPE} is supported")
            shape = tuple(ent["shape"])
            n = math.prod(shape) * 4
            start = ent["offset"]
            if start < 0 or start + n > len(blob):
                raise ValueError(f"{path}: tensor {ent['name']} runs past end of file")
            tensors[ent["name"]] = np.frombuffer(blob[start : start + n], dtype=DTYPE).reshape(shape).copy()
        return cls(tensors, manifest.get("meta", {}))


def load_weights(graph: NetGraph, store: WeightStore) -> NetGraph:
    """Bind ``store`` to ``graph``; every mismatch is reported at once."""
    residual = store.meta.get("residual")
    return graph.with_weights(
        {k: np.asarray(v, dtype=np.float32) for k, v in store.tensors.items()},
        residual=residual,
    )


def save_weights(graph: NetGraph, path) -> None:
    WeightStore.from_graph(graph).write(path)


def read_graph(path) -> NetGraph:
    """Rebuild a graph from the store's ``meta`` and bind its tensors."""
    store = WeightStore.read(path)
    m = store.meta
    try:
        graph = NetGraph(m["kind"], int(m["image_channels"]), tuple(m["widths"]), int(m["blocks"]))
    except KeyError as exc:
        raise ValueError(f"{path}: manifest meta lacks {exc.args[0]!r}") from exc
    return load_weights(graph, store)
