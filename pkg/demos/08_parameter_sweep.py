"""
Sensitivity to lambda and rho
=============================

PSNR over a window of the power-of-two grid around the defaults on the
128x128 motion-blur case.
"""

# %%
import numpy as np

from blindpnp.bench import surface, sweep
from blindpnp.degradation import DegradationSpec
from blindpnp.denoisers import Denoiser
from blindpnp.samples import center_crop, sample_image, shipped_kernel

gt = center_crop(sample_image("camera"), 128)
spec = DegradationSpec("deblur", shipped_kernel("motion19"), sigma_s=8, seed=0)

# %%
lam_exp, rho_exp = range(-3, 2), range(-1, 4)
rows = sweep(gt, spec, den=Denoiser("tv"), lam_exp=lam_exp, rho_exp=rho_exp)
s = surface(rows)
print("rho ->      " + " ".join(f"2^{b:<4d}" for b in rho_exp))
for a, line in zip(lam_exp, s):
    print(f"lambda 2^{a:<3d}" + " ".join(f"{v:6.2f}" for v in line))
print(f"range {np.ptp(s):.2f} dB")

# %% with a TV prior rho directly scales the smoothing strength, so large
# rho over-smooths; very small lambda lets the working level saturate
