"""
Super-resolution x2 / x3 / x4
=============================
"""

# %%
from blindpnp.degradation import DegradationSpec, degrade, make_bicubic_kernel
from blindpnp.denoisers import Denoiser
from blindpnp.image import upsample_bicubic
from blindpnp.metrics import psnr
from blindpnp.pnp import run_restore
from blindpnp.samples import center_crop, sample_image

gt = center_crop(sample_image("astronaut"), 120)

# %% the default rho grows with the scale factor
for s in (2, 3, 4):
    spec = DegradationSpec("sisr", make_bicubic_kernel(s), scale=s, sigma_s=2, seed=s)
    y = degrade(gt, spec)
    res = run_restore(y, spec, den=Denoiser("tv"))
    print(f"x{s}: input {y.shape[:2]}  bicubic {psnr(upsample_bicubic(y, s), gt):.2f}  restored {psnr(res.image, gt):.2f}  iters {res.iterations}")
