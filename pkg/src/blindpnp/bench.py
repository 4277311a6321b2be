"""Dataset benchmarks and (lambda, rho) sweeps built on :func:`run_restore`."""

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
import os
import time

import numpy as np

from .degradation import DegradationSpec, degrade
from .denoisers import Denoiser
from .image import load_image
from .metrics import evaluate, mean_row, psnr
from .noise import NoiseEstimator
from .pnp import PnPConfig, run_restore

__all__ = ["IMAGE_SUFFIXES", "SWEEP_LAMBDA_EXP", "SWEEP_RHO_EXP", "Cell", "crop_to_scale", "list_dataset", "restore_one", "run_cell", "surface", "sweep"]

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm")
SWEEP_LAMBDA_EXP = tuple(range(-5, 6))
SWEEP_RHO_EXP = tuple(range(-1, 10))


@dataclasses.dataclass(frozen=True)
class Cell:
    """One benchmark setting: a degradation with its label."""

    label: str
    spec: DegradationSpec


def list_dataset(directory) -> list:
    d = os.fspath(directory)
    if not os.path.isdir(d):
        raise FileNotFoundError(f"dataset directory {d!r} does not exist")
    files = sorted(f for f in os.listdir(d) if f.lower().endswith(IMAGE_SUFFIXES))
    if not files:
        raise ValueError(f"dataset {d!r} contains no {'/'.join(IMAGE_SUFFIXES)} images")
    return [os.path.join(d, f) for f in files]


def crop_to_scale(img, s):
    h, w = img.shape[0] // s * s, img.shape[1] // s * s
    return img[:h, :w]


def restore_one(gt, spec, est, den, cfg, border=0):
    """Degrade ``gt``, restore it and score both. Returns a dict row."""
    y = degrade(gt, spec)
    t0 = time.perf_counter()
    res = run_restore(y, spec, est, den, cfg, gt if cfg.stop_mode == "psnr_oracle" else None)
    log.info("restored in %.2fs (%d iterations)", time.perf_counter() - t0, res.iterations)
    rep = evaluate("", res.image, gt, border)
    row = {
        "sigma_est": res.sigma_s,
        "iters": res.iterations,
        "psnr_rgb": rep.psnr_rgb,
        "psnr_y": rep.psnr_y,
        "ssim": rep.ssim,
    }
    if spec.task != "sisr":
        row["psnr_input"] = psnr(y, gt)
    return row


def _job(args):
    path, index, cell, est, den, cfg, border = args
    gt = load_image(path)
    if cell.spec.task == "sisr":
        gt = crop_to_scale(gt, cell.spec.scale)
    spec = dataclasses.replace(cell.spec, seed=cell.spec.seed + index)
    row = {"image": os.path.basename(path), "cell": cell.label, "seed": spec.seed}
    row.update(restore_one(gt, spec, est, den, cfg, border))
    return row


def run_cell(paths, cell: Cell, est=None, den=None, cfg=None, border=0, jobs=1) -> list:
    """Per-image rows for one cell followed by their mean row.

    Image ``i`` uses noise seed ``cell.spec.seed + i``. Rows keep input
    order whatever the completion order of parallel jobs.
    """
    est = est or NoiseEstimator()
    den = den or Denoiser()
    cfg = cfg or PnPConfig()
    tasks = [(p, i, cell, est, den, cfg, border) for i, p in enumerate(paths)]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_job, tasks))
    else:
        rows = [_job(t) for t in tasks]
    mean = mean_row(rows, "mean")
    mean["seed"] = ""
    return rows + [mean]


def sweep(gt, spec, est=None, den=None, cfg=None, lam_exp=SWEEP_LAMBDA_EXP, rho_exp=SWEEP_RHO_EXP) -> list:
    """PSNR of the restoration over ``lam = 2**a``, ``rho = 2**b``.

    Returns ``[{"lambda", "rho", "psnr"}, ...]`` in row-major ``(a, b)``
    order. ``spec`` is applied once; every cell restores the same ``y``.
    """
    est = est or NoiseEstimator()
    den = den or Denoiser()
    cfg = cfg or PnPConfig()
    y = degrade(gt, spec)
    out = []
    for a in lam_exp:
        for b in rho_exp:
            c = dataclasses.replace(cfg, lam=2.0 ** a, rho=2.0 ** b)
            res = run_restore(y, spec, est, den, c, gt if c.stop_mode == "psnr_oracle" else None)
            out.append({"lambda": 2.0 ** a, "rho": 2.0 ** b, "psnr": psnr(res.image, gt)})
    return out


def surface(rows: list) -> np.ndarray:
    """Reshape :func:`sweep` rows into a ``lambda x rho`` PSNR array."""
    lams = sorted({r["lambda"] for r in rows})
    rhos = sorted({r["rho"] for r in rows})
    out = np.full((len(lams), len(rhos)), np.nan)
    for r in rows:
        out[lams.index(r["lambda"]), rhos.index(r["rho"])] = r["psnr"]
    return out
