"""
Degradations and the closed-form data step
==========================================

Blur, decimate and add noise to a sample image, then solve the quadratic
data step in the Fourier domain and compare it with an explicit matrix
solve on a tiny crop.
"""

# %%
import numpy as np

from blindpnp.degradation import DegradationSpec, degrade, make_bicubic_kernel
from blindpnp.metrics import psnr
from blindpnp.samples import center_crop, sample_image, shipped_kernel
from blindpnp.spectral import FidelityWeights, deblur_x_step, dense_oracle_solve, psf_to_otf, sisr_x_step

gt = center_crop(sample_image("camera"), 128)
k = shipped_kernel("motion19")
print("image", gt.shape, "kernel", k.shape, "kernel sum", k.sum())

# %% motion blur plus noise on the 0-255 scale
spec = DegradationSpec("deblur", k, sigma_s=8, seed=0)
y = degrade(gt, spec)
print(f"blurred + noisy PSNR {psnr(y, gt):.2f} dB")

# %% one data step with v = y; small alpha trusts the observation more
otf = psf_to_otf(k, *gt.shape[:2])
for sigma_k in (5.0, 20.0, 50.0):
    x = deblur_x_step(y, y, otf, FidelityWeights(0.37, 8.0, sigma_k))
    print(f"sigma_k={sigma_k:5.1f}  PSNR(x) {psnr(np.clip(x, 0, 1), gt):.2f} dB")

# %% SISR: bicubic-approximation kernel, x2 decimation
lr_spec = DegradationSpec("sisr", make_bicubic_kernel(2), scale=2, sigma_s=2, seed=1)
lr = degrade(gt, lr_spec)
print("low-resolution", lr.shape)

# %% the FFT solvers against dense normal equations on a 12x12 crop
tiny = gt[:12, :12]
w = FidelityWeights(0.37, 8.0, 20.0)
k5 = np.outer([1, 4, 6, 4, 1], [1, 4, 6, 4, 1]) / 256.0
s_db = DegradationSpec("deblur", k5)
s_sr = DegradationSpec("sisr", k5, 3)
y_db, y_sr = degrade(tiny, s_db), degrade(tiny, s_sr)
ref_db = dense_oracle_solve(s_db, y_db, tiny, w)
ref_sr = dense_oracle_solve(s_sr, y_sr, tiny, w)
print("deblur max |fft - dense|", np.abs(deblur_x_step(y_db, tiny, psf_to_otf(k5, 12, 12), w) - ref_db).max())
print("sisr   max |fft - dense|", np.abs(sisr_x_step(y_sr, tiny, psf_to_otf(k5, 12, 12), w.alpha) - ref_sr).max())
