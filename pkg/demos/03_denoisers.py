"""
Denoiser backends
=================

The identity, total-variation and network denoisers share one call
signature ``D(x, sigma, curvature)``; ``rho`` scales the level passed in.
"""

# %%
import numpy as np

from blindpnp.curvature import gaussian_curvature
from blindpnp.degradation import add_gaussian_noise
from blindpnp.denoisers import Denoiser, denoise, total_variation
from blindpnp.metrics import psnr
from blindpnp.nn import SMALL_WIDTHS, build_cunet_denoiser
from blindpnp.samples import center_crop, sample_image

gt = center_crop(sample_image("camera"), 128)
noisy = add_gaussian_noise(gt, 25, seed=3)
print(f"noisy PSNR {psnr(noisy, gt):.2f}")

# %% TV with the true level, then with rho scaling it
for rho in (0.5, 1.0, 2.0):
    out = denoise(Denoiser("tv", rho=rho), noisy, 25.0)
    print(f"tv rho={rho:3.1f}  PSNR {psnr(out, gt):.2f}  TV {total_variation(out):9.1f}")

# %% calibration: on a flat image the removed residual has std close to sigma
flat = add_gaussian_noise(np.full((128, 128, 1), 0.5), 25, seed=4)
res = flat - denoise(Denoiser("tv"), flat, 25.0)
print("residual std (0-255):", res.std() * 255)

# %% an untrained network: random weights give noise, zero residual gives x
g = build_cunet_denoiser(SMALL_WIDTHS, 3, blocks=1, residual=True).zero_weights()
out = denoise(Denoiser("cnn", graph=g), noisy, 25.0, gaussian_curvature(noisy))
print("zero-weight residual network is the identity:", np.array_equal(out, noisy))
