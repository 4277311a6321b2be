"""
Curvature maps and noise-level estimation
=========================================
"""

# %%
import numpy as np

from blindpnp.curvature import gaussian_curvature
from blindpnp.degradation import add_gaussian_noise
from blindpnp.noise import NoiseEstimator, estimate_sigma_mad
from blindpnp.samples import center_crop, sample_image

# %% a paraboloid has curvature 1 at its apex and decays away from it
i, j = np.mgrid[-10:11, -10:11].astype(float)
k = gaussian_curvature((i ** 2 + j ** 2) / 2)[:, :, 0]
print("apex", k[10, 10], " at distance 3:", k[10, 13], " analytic:", 1 / (1 + 9) ** 2)

# %% on a photo the map lights up on corners and texture, not on flat areas
img = center_crop(sample_image("camera"), 96)
c = gaussian_curvature(img)
print("curvature range", c.min(), c.max())
print("fraction of |K| > 1e-3:", np.mean(np.abs(c) > 1e-3))

# %% MAD of the finest diagonal Haar band
for sigma in (5, 15, 25, 50):
    noisy = add_gaussian_noise(img, sigma, seed=sigma)
    print(f"true {sigma:2d}  estimated {estimate_sigma_mad(noisy).sigma:6.2f}")

# %% texture in the clean image biases the estimate upwards at low noise
print("clean image estimate", NoiseEstimator()(img).sigma)
