"""
Command-line workflow
=====================

The same steps as ``blindpnp degrade ...`` / ``blindpnp restore ...`` in a
shell, driven through ``main`` so the demo is self-contained.
"""

# %%
import os
import tempfile

from blindpnp.cli import main
from blindpnp.image import save_image
from blindpnp.samples import center_crop, sample_image

work = tempfile.mkdtemp(prefix="blindpnp_demo_")
gt = os.path.join(work, "gt.png")
save_image(center_crop(sample_image("camera"), 128), gt)

# %% degrade writes the image, a manifest and the kernel it used
main(["degrade", gt, os.path.join(work, "y.png"), "--task", "deblur", "--kernel", "motion19", "--sigma", "8", "--seed", "0"])
print(open(os.path.join(work, "y.png.manifest")).read())

# %% restore picks the manifest up; --gt prints metrics
main(["restore", os.path.join(work, "y.png"), os.path.join(work, "x.png"), "--gt", gt, "--trace", os.path.join(work, "trace.csv")])
print(open(os.path.join(work, "trace.csv")).read().splitlines()[:4])

# %% a small benchmark over a one-image dataset, two noise levels
ds = os.path.join(work, "ds")
os.makedirs(ds)
save_image(center_crop(sample_image("moon"), 96), os.path.join(ds, "moon.png"))
main(["benchmark", ds, "--task", "deblur", "--kernel", "gauss7_std0.7", "--sigma", "5,15", "--out-dir", os.path.join(work, "bench")])
print("outputs in", work)
