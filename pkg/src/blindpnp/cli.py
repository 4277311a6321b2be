"""Command-line front end: ``blindpnp {degrade,restore,benchmark,estimate-noise,curvature}``.

Images are read and written as 8-bit PNG / PGM / PPM, or as float ``.npy``
arrays when the path ends in ``.npy`` (lossless, unclipped).

Config files
------------
``--config FILE`` reads a flat key-value document, one ``key = value`` per
line; ``#`` starts a comment. Keys are long option names without the
leading dashes (``lambda = 0.37``, ``denoiser = tv``). Repeatable options
take a comma-separated list. Flags on the command line win over the file.

Manifests
---------
``degrade`` writes ``OUTPUT.manifest`` in the same grammar, recording the
task, scale, noise level, seed, kernel file and its sha256, and any
reflective padding applied before decimation. ``restore`` reads it when it
sits next to the input (or via ``--manifest``) and checks the kernel hash.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import bench
from .curvature import gaussian_curvature
from .degradation import DegradationSpec, degrade, kernel_hash, load_kernel, make_bicubic_kernel, save_kernel
from .denoisers import Denoiser
from .image import as_image, load_image, save_image
from .metrics import evaluate, format_table, write_csv
from .nn.weights import read_graph
from .noise import NoiseEstimator
from .pnp import PnPConfig, run_restore, trace_to_rows
from .samples import kernel_path, list_kernels

log = logging.getLogger("blindpnp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
STOP_ALIASES = {"psnr": "psnr_oracle", "psnr_oracle": "psnr_oracle", "rel_change": "rel_change", "none": "none"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# -- key-value documents ----------------------------------------------------

def read_kv(path) -> dict:
    out = {}
    with open(os.fspath(path)) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{n}: expected 'key = value', got {line!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            if not key:
                raise DataError(f"{path}:{n}: empty key")
            out[key] = val
    return out


def write_kv(d: dict, path) -> None:
    with open(os.fspath(path), "w") as fh:
        for k, v in d.items():
            fh.write(f"{k} = {v}\n")


# -- I/O helpers -------------------------------------------------------------

def read_any(path) -> np.ndarray:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    try:
        if path.endswith(".npy"):
            return as_image(np.load(path, allow_pickle=False))
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_any(img, path) -> None:
    path = os.fspath(path)
    if path.endswith(".npy"):
        np.save(path, as_image(img))
    else:
        save_image(img, path)


def resolve_kernel(ref: str) -> tuple:
    """``ref`` is a file path or a shipped kernel name. Returns (kernel, path)."""
    if os.path.isfile(ref):
        path = ref
    elif ref in list_kernels():
        path = os.fspath(kernel_path(ref))
    else:
        raise DataError(f"kernel {ref!r} is neither a file nor one of {list_kernels()}")
    try:
        return load_kernel(path), path
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def _pad_to_multiple(img, s):
    ph, pw = -img.shape[0] % s, -img.shape[1] % s
    if ph or pw:
        mode = "reflect" if img.shape[0] > ph and img.shape[1] > pw else "symmetric"
        img = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode=mode)
    return img, ph, pw


# -- building engine parts from arguments --------------------------------------

def _graph(path, what):
    if not path:
        raise UsageError(f"{what} backend 'cnn' needs a weights file (cnn:<path> or --weights)")
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such weights file")
    try:
        return read_graph(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def build_denoiser(args) -> Denoiser:
    name = args.denoiser
    if name.startswith("cnn"):
        path = name[4:] if name.startswith("cnn:") else args.weights
        return Denoiser("cnn", graph=_graph(path, "denoiser"))
    if name not in ("identity", "tv"):
        raise UsageError(f"unknown denoiser {name!r}; use identity, tv or cnn:<path>")
    return Denoiser(name)


def build_estimator(args) -> NoiseEstimator:
    name = args.estimator
    if name.startswith("cnn"):
        path = name[4:] if name.startswith("cnn:") else None
        return NoiseEstimator("cnn", _graph(path, "estimator"))
    if name != "mad":
        raise UsageError(f"unknown estimator {name!r}; use mad or cnn:<path>")
    return NoiseEstimator("mad")


def build_config(args, sigma_override=None) -> PnPConfig:
    try:
        return PnPConfig(
            lam=args.lam,
            rho=args.rho,
            max_iters=15 if args.iters is None else args.iters,
            stop_mode=STOP_ALIASES[args.stop],
            rel_tol=args.rel_tol,
            sigma_s=sigma_override,
            trace=True,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_spec(task, kernel, scale, sigma=0.0, seed=0) -> DegradationSpec:
    try:
        return DegradationSpec(task, kernel, scale, sigma, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _default_kernel(task, scale):
    # SISR without an explicit kernel uses the windowed-cubic approximation
    return make_bicubic_kernel(scale) if task == "sisr" else None


# -- commands -----------------------------------------------------------------

def cmd_degrade(args) -> int:
    x = read_any(args.input)
    kernel, kpath = (None, None)
    if args.kernel:
        if args.task == "denoise":
            raise UsageError("--kernel is not used by the denoise task")
        kernel, kpath = resolve_kernel(args.kernel)
    elif args.task == "deblur":
        raise UsageError("deblur needs --kernel")
    else:
        kernel = _default_kernel(args.task, args.scale)
    sigma = args.sigma if args.sigma is not None else 0.0
    spec = build_spec(args.task, kernel, args.scale, sigma, args.seed)

    ph = pw = 0
    if args.task == "sisr":
        x, ph, pw = _pad_to_multiple(x, args.scale)
    y = degrade(x, spec)
    write_any(y, args.output)

    out_dir = os.path.dirname(os.path.abspath(args.output))
    man = {
        "task": spec.task,
        "scale": spec.scale,
        "sigma": repr(float(spec.sigma_s)),
        "seed": spec.seed,
        "input": os.path.abspath(args.input),
        "orig_height": x.shape[0] - ph,
        "orig_width": x.shape[1] - pw,
        "pad_bottom": ph,
        "pad_right": pw,
        "pad_mode": "reflect" if (ph or pw) else "none",
    }
    if spec.kernel is not None:
        ker_file = os.path.basename(args.output) + ".kernel.txt"
        save_kernel(spec.kernel, os.path.join(out_dir, ker_file))
        man["kernel"] = ker_file
        man["kernel_source"] = kpath or "bicubic-approximation"
        man["kernel_sha256"] = kernel_hash(spec.kernel)
    write_kv(man, args.output + ".manifest")
    log.info("wrote %s (%dx%d) and manifest", args.output, y.shape[0], y.shape[1])
    return EXIT_OK


def read_manifest(path) -> dict:
    """Parse a degrade manifest back into typed fields."""
    kv = read_kv(path)
    try:
        out = {
            "task": kv["task"],
            "scale": int(kv["scale"]),
            "sigma": float(kv["sigma"]),
            "seed": int(kv["seed"]),
            "orig_height": int(kv.get("orig_height", 0)),
            "orig_width": int(kv.get("orig_width", 0)),
            "pad_bottom": int(kv.get("pad_bottom", 0)),
            "pad_right": int(kv.get("pad_right", 0)),
            "kernel": None,
        }
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed manifest ({exc})") from exc
    if "kernel" in kv:
        kfile = os.path.join(os.path.dirname(os.path.abspath(path)), kv["kernel"])
        k, _ = resolve_kernel(kfile)
        if kernel_hash(k) != kv.get("kernel_sha256"):
            raise DataError(f"{kfile}: kernel hash does not match manifest")
        out["kernel"] = k
    return out


def manifest_spec(man: dict) -> DegradationSpec:
    return build_spec(man["task"], man["kernel"], man["scale"], man["sigma"], man["seed"])


def cmd_restore(args) -> int:
    if args.sigma is not None and args.blind:
        raise UsageError("--sigma and --blind are mutually exclusive")
    if STOP_ALIASES[args.stop] == "psnr_oracle" and not args.gt:
        raise UsageError("--stop psnr needs --gt (it compares against ground truth)")
    y = read_any(args.input)

    man_path = args.manifest or (args.input + ".manifest" if os.path.isfile(args.input + ".manifest") else None)
    man = read_manifest(man_path) if man_path else None
    task = args.task or (man["task"] if man else None)
    if task is None:
        raise UsageError("--task is required when no manifest is available")
    scale = args.scale or (man["scale"] if man else 1)
    if args.kernel:
        kernel, _ = resolve_kernel(args.kernel)
    elif man is not None and man["task"] == task:
        kernel = man["kernel"]
    elif task == "deblur":
        raise UsageError("deblur needs --kernel (or a manifest recording one)")
    else:
        kernel = _default_kernel(task, scale)
    spec = build_spec(task, kernel if task != "denoise" else None, scale)

    den = build_denoiser(args)
    est = build_estimator(args)
    cfg = build_config(args, args.sigma)

    gt = None
    if args.gt:
        gt = read_any(args.gt)
        if task == "sisr":
            gt, _, _ = _pad_to_multiple(gt, scale)
    res = run_restore(y, spec, est, den, cfg, gt)
    out = res.image
    if man is not None and task == "sisr" and man["orig_height"]:
        out = out[: man["orig_height"], : man["orig_width"]]
        gt = gt[: man["orig_height"], : man["orig_width"]] if gt is not None else None
    write_any(out, args.output)
    log.info("sigma_s=%.3f iterations=%d", res.sigma_s, res.iterations)

    if args.trace:
        with open(args.trace, "w") as fh:
            write_csv(trace_to_rows(res.trace), fh)
    if gt is not None:
        rep = evaluate(os.path.basename(args.output), out, gt, args.crop_border)
        py = "" if rep.psnr_y is None else f" psnr_y={rep.psnr_y:.4f}"
        print(f"{rep.name}: psnr={rep.psnr_rgb:.4f}{py} ssim={rep.ssim:.4f} sigma_s={res.sigma_s:.4f} iters={res.iterations}")
    return EXIT_OK


def _cells(args) -> list:
    sigmas = args.sigma or [0.0]
    cells = []
    if args.task == "sisr":
        for s in args.scale_list or [2]:
            kernel, name = (resolve_kernel(args.kernel[0])[0], args.kernel[0]) if args.kernel else (make_bicubic_kernel(s), "bicubic")
            for sg in sigmas:
                cells.append(bench.Cell(f"x{s}/{name}/sigma{sg:g}", build_spec("sisr", kernel, s, sg, args.seed)))
    elif args.task == "deblur":
        if not args.kernel:
            raise UsageError("deblur benchmark needs at least one --kernel")
        for ref in args.kernel:
            kernel, _ = resolve_kernel(ref)
            for sg in sigmas:
                cells.append(bench.Cell(f"{os.path.basename(ref)}/sigma{sg:g}", build_spec("deblur", kernel, 1, sg, args.seed)))
    else:
        for sg in sigmas:
            cells.append(bench.Cell(f"sigma{sg:g}", build_spec("denoise", None, 1, sg, args.seed)))
    return cells


def cmd_benchmark(args) -> int:
    try:
        paths = bench.list_dataset(args.dataset)
    except (FileNotFoundError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if args.iters is None and args.task == "denoise":
        # standalone denoising is a single pass
        args.iters = 1
    den = build_denoiser(args)
    est = build_estimator(args)
    cfg = build_config(args)
    os.makedirs(args.out_dir, exist_ok=True)

    rows, means = [], []
    for cell in _cells(args):
        log.info("cell %s over %d images", cell.label, len(paths))
        cell_rows = bench.run_cell(paths, cell, est, den, cfg, args.crop_border, args.jobs)
        rows += cell_rows
        means.append(cell_rows[-1])
    with open(os.path.join(args.out_dir, "results.csv"), "w") as fh:
        write_csv(rows, fh)
    table = format_table(means)
    with open(os.path.join(args.out_dir, "summary.txt"), "w") as fh:
        fh.write(table)
    print(table, end="")

    if args.sweep:
        cell = _cells(args)[0]
        gt = read_any(paths[0])
        if cell.spec.task == "sisr":
            gt = bench.crop_to_scale(gt, cell.spec.scale)
        sw = bench.sweep(gt, cell.spec, est, den, cfg)
        with open(os.path.join(args.out_dir, "sweep.csv"), "w") as fh:
            write_csv(sw, fh)
        log.info("sweep over %d (lambda, rho) cells on %s", len(sw), os.path.basename(paths[0]))
    return EXIT_OK


def cmd_estimate_noise(args) -> int:
    est = build_estimator(args)
    rows = []
    for p in args.inputs:
        rows.append({"image": os.path.basename(p), "sigma": est(read_any(p)).sigma})
    if args.csv:
        with open(args.csv, "w") as fh:
            write_csv(rows, fh)
    for r in rows:
        print(f"{r['image']}\t{r['sigma']:.4f}")
    return EXIT_OK


def cmd_curvature(args) -> int:
    img = read_any(args.input)
    k = gaussian_curvature(img)
    peak = float(np.max(np.abs(k)))
    # signed map around mid-gray, scaled by the largest magnitude
    viz = 0.5 + 0.5 * k / peak if peak > 0 else np.full_like(k, 0.5)
    write_any(viz, args.output)
    if args.raw:
        k.astype("<f4").tofile(args.raw)
        print(f"raw float32 LE, shape {k.shape[0]}x{k.shape[1]}x{k.shape[2]} (H x W x C)")
    print(f"curvature range [{k.min():.6g}, {k.max():.6g}]")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _csv_list(conv):
    def parse(text):
        return [conv(t) for t in str(text).split(",") if t.strip()]
    return parse


def _add_engine_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=0.37, help="data/prior balance (default 0.37)")
    p.add_argument("--rho", type=float, default=None, help="denoiser noise multiplier (default: per task)")
    p.add_argument("--iters", type=int, default=None, help="maximum iterations K (default 15; 1 for denoise benchmarks)")
    p.add_argument("--stop", choices=sorted(STOP_ALIASES), default="rel_change")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-4)
    p.add_argument("--denoiser", default="tv", help="identity | tv | cnn:<weights>")
    p.add_argument("--estimator", default="mad", help="mad | cnn:<weights>")
    p.add_argument("--weights", default=None, help="weights for '--denoiser cnn'")
    p.add_argument("--crop-border", dest="crop_border", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindpnp", description="Blind plug-and-play image restoration.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="blur / decimate / add noise to a clean image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--task", choices=["denoise", "deblur", "sisr"], required=True)
    p.add_argument("--kernel", help="kernel file or shipped name (" + ", ".join(list_kernels()) + ")")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--sigma", type=float, default=None, help="noise std on the 0-255 scale")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("restore", help="restore a degraded image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--manifest", help="degrade manifest (default: INPUT.manifest if present)")
    p.add_argument("--task", choices=["denoise", "deblur", "sisr"])
    p.add_argument("--kernel")
    p.add_argument("--scale", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None, help="known noise level; disables estimation")
    p.add_argument("--blind", action="store_true", help="estimate the noise level (default)")
    p.add_argument("--gt", help="ground truth for metrics and --stop psnr")
    p.add_argument("--trace", help="write the per-iteration trace CSV here")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("benchmark", help="degrade, restore and score a directory of images")
    p.add_argument("dataset")
    p.add_argument("--out-dir", dest="out_dir", default="bench_out")
    p.add_argument("--task", choices=["denoise", "deblur", "sisr"], required=True)
    p.add_argument("--kernel", type=_csv_list(str), action="extend", help="repeatable / comma list")
    p.add_argument("--scale", dest="scale_list", type=_csv_list(int), action="extend")
    p.add_argument("--sigma", type=_csv_list(float), action="extend")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--sweep", action="store_true", help="also write the 11x11 (lambda, rho) PSNR grid")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("estimate-noise", help="print the estimated noise level of images")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--estimator", default="mad")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_estimate_noise)

    p = sub.add_parser("curvature", help="Gaussian curvature map of an image")
    p.add_argument("input")
    p.add_argument("output", help="8-bit visualization (mid-gray = 0)")
    p.add_argument("--raw", help="also dump the map as little-endian float32")
    p.set_defaults(func=cmd_curvature)

    for sp in sub.choices.values():
        sp.add_argument("--config", help="key = value defaults file; flags take precedence")
    return parser


def _apply_config(parser, argv) -> None:
    """Load ``--config`` (if any) as defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    kv = read_kv(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((t for t in argv if t in sub.choices), None)
    if cmd is None:
        return
    sp = sub.choices[cmd]
    actions = {}
    for a in sp._actions:
        for opt in a.option_strings:
            if opt.startswith("--"):
                actions[opt[2:]] = a
    defaults = {}
    for key, val in kv.items():
        a = actions.get(key)
        if a is None or key == "config":
            raise UsageError(f"{known.config}: unknown key {key!r} for '{cmd}'")
        if isinstance(a, argparse._StoreTrueAction):
            defaults[a.dest] = val.lower() in ("1", "true", "yes", "on")
        elif isinstance(a, argparse._ExtendAction):
            defaults[a.dest] = a.type(val)
        else:
            conv = a.type or str
            try:
                v = conv(val)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"{known.config}: bad value for {key!r}: {val!r}") from exc
            if a.choices and v not in a.choices:
                raise UsageError(f"{known.config}: {key} must be one of {sorted(a.choices)}")
            defaults[a.dest] = v
    sp.set_defaults(**defaults)
    for a in sp._actions:
        if a.dest in defaults and a.required:
            a.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except UsageError as exc:
        print(f"blindpnp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"blindpnp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"blindpnp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"blindpnp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
