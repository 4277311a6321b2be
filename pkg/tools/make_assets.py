"""Regenerate the files under src/blindpnp/data.

Sample images come from scikit-image's bundled public-domain / CC0 data and
are downscaled 2x by block averaging. The two motion kernels are synthetic
camera-shake trajectories (seeded random walk with momentum, bilinear
splatting) standing in for recorded kernels that cannot be fetched here.

Run from the repository root: ``python3 tools/make_assets.py``. Requires
scikit-image, which the library itself does not depend on.
"""

import pathlib

import numpy as np
from PIL import Image
from skimage import data

from blindpnp.degradation import make_bicubic_kernel, make_gaussian_kernel, save_kernel

ROOT = pathlib.Path(__file__).resolve().parents[1] / "src" / "blindpnp" / "data"


def halve(img):
    img = img.astype(np.float64)
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    img = img[:h, :w]
    out = (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2]) / 4
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def motion_kernel(size, seed, steps=4000):
    rng = np.random.Generator(np.random.Philox(seed))
    pos = np.zeros(2)
    vel = rng.standard_normal(2)
    pts = []
    for _ in range(steps):
        vel = 0.995 * vel + 0.08 * rng.standard_normal(2)
        pos = pos + 0.02 * vel
        pts.append(pos.copy())
    pts = np.array(pts)
    pts -= pts.mean(axis=0)
    # fit the path into the inner (size - 3) pixels
    pts *= (size - 3) / 2 / np.abs(pts).max()
    pts += size // 2
    k = np.zeros((size, size))
    for r, c in pts:
        r0, c0 = int(np.floor(r)), int(np.floor(c))
        fr, fc = r - r0, c - c0
        k[r0, c0] += (1 - fr) * (1 - fc)
        k[r0 + 1, c0] += fr * (1 - fc)
        k[r0, c0 + 1] += (1 - fr) * fc
        k[r0 + 1, c0 + 1] += fr * fc
    return k / k.sum()


def main():
    img_dir = ROOT / "images"
    ker_dir = ROOT / "kernels"
    img_dir.mkdir(parents=True, exist_ok=True)
    ker_dir.mkdir(parents=True, exist_ok=True)
    Image.fromarray(halve(data.camera())).save(img_dir / "camera.pgm")
    Image.fromarray(halve(data.moon())).save(img_dir / "moon.pgm")
    Image.fromarray(halve(data.astronaut())).save(img_dir / "astronaut.ppm")
    Image.fromarray(halve(data.coffee())).save(img_dir / "coffee.ppm")
    save_kernel(motion_kernel(19, 19), ker_dir / "motion19.txt")
    save_kernel(motion_kernel(27, 27), ker_dir / "motion27.txt")
    save_kernel(make_gaussian_kernel(7, 0.7), ker_dir / "gauss7_std0.7.txt")
    for s in (2, 3, 4):
        save_kernel(make_bicubic_kernel(s), ker_dir / f"bicubic_x{s}.txt")


if __name__ == "__main__":
    main()
