"""
Blind deblurring with the TV prior
==================================

The observation noise is estimated from ``y``; each iteration re-estimates
the working level from the current data-step output.
"""

# %%
from blindpnp.degradation import DegradationSpec, degrade
from blindpnp.denoisers import Denoiser
from blindpnp.metrics import psnr, ssim
from blindpnp.pnp import PnPConfig, run_restore
from blindpnp.samples import center_crop, sample_image, shipped_kernel

gt = center_crop(sample_image("camera"), 128)
spec = DegradationSpec("deblur", shipped_kernel("motion19"), sigma_s=8, seed=0)
y = degrade(gt, spec)

# %% default run: 15 iterations at most, stop on small relative change
res = run_restore(y, spec, den=Denoiser("tv"))
print(f"sigma_s estimate {res.sigma_s:.2f} (true 8)")
print(f"PSNR {psnr(y, gt):.2f} -> {psnr(res.image, gt):.2f}, SSIM {ssim(y, gt):.3f} -> {ssim(res.image, gt):.3f}")

# %% the trace: relative changes shrink and the working level settles
for row in res.trace:
    print(f"k={row.k:2d}  rel_err_x {row.rel_err_x:.2e}  rel_err_v {row.rel_err_v:.2e}  sigma_k {row.sigma_k:6.2f}")

# %% non-blind run with the true level, and the ground-truth stopping rule
known = run_restore(y, spec, den=Denoiser("tv"), cfg=PnPConfig(sigma_s=8.0))
oracle = run_restore(y, spec, den=Denoiser("tv"), cfg=PnPConfig(stop_mode="psnr_oracle"), gt=gt)
print(f"known sigma {psnr(known.image, gt):.2f} dB, psnr stop {psnr(oracle.image, gt):.2f} dB after {oracle.iterations}")
