"""
Network graphs and weight files
===============================

Build the curvature-aware U-Net, inspect shapes, write a weight file and
read it back. No training happens here; weights come from an external
harness that writes the same file layout.
"""

# %%
import os
import tempfile

import numpy as np

from blindpnp.nn import FULL_WIDTHS, SMALL_WIDTHS, build_cunet_denoiser, build_cunet_estimator, read_graph, run_on_image, save_weights

# %% parameter counts and output shapes
for widths in (SMALL_WIDTHS, FULL_WIDTHS):
    den = build_cunet_denoiser(widths, 7)
    est = build_cunet_estimator(widths, 3)
    print(widths, "denoiser", den.num_params(), "estimator", est.num_params())
print(build_cunet_denoiser(SMALL_WIDTHS, 3).output_shapes((1, 3, 64, 64)))

# %% a seeded random init for gray images (inputs: image, curvature, level), saved and reloaded bitwise
g = build_cunet_denoiser((8, 8, 16, 16), 3, blocks=1).init_weights(0)
with tempfile.TemporaryDirectory() as d:
    path = os.path.join(d, "den.bin")
    save_weights(g, path)
    h = read_graph(path)
    print("file size", os.path.getsize(path), "bytes; identical:", all(np.array_equal(g.weights[k], h.weights[k]) for k in g.weights))

# %% odd-sized inputs are reflect-padded to a multiple of 8 and cropped back
out = run_on_image(h, np.random.default_rng(0).random((37, 53, 3)))
print({k: v.shape for k, v in out.items()})
