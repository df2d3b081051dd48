"""
Command line front end.

::

    lrterrain fit --input points.xyz --preset F7 --out run/
    lrterrain export raster --surface run/surface.lrsurf --cellsize 1 --out dem.asc
    lrterrain export split-tp --surface run/surface.lrsurf --max-segmented 4 --out patches/
    lrterrain analyze contour --surface run/surface.lrsurf --levels -100:0:1 --out contours.csv
    lrterrain accuracy --surface dem.asc --input points.xyz

Exit codes: 0 success, 2 input/output or usage error, 3 computation failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict

import numpy as np

from .analysis import ContourError, contour, extremal_points, slope
from .fitting import (FitConfig, FitError, PointCloud, adaptive_fit, compute_accuracy, limit_surfaces,
                      read_config, weighted_mid_surface)
from .fitting.adaptive import IterationRecord
from .io import (FormatError, idw_raster, raster_bilinear_eval, raster_from_surface, read_asc, read_lrsurf,
                 read_xyz, split_to_tp, write_asc, write_contours_csv, write_extrema_csv, write_lrsurf,
                 write_patch_set)
from .io.formats import lrsurf_to_string

log = logging.getLogger("lrterrain")

EXIT_OK, EXIT_IO, EXIT_FAIL = 0, 2, 3
THREADS_ENV = "LRTERRAIN_THREADS"


class UsageError(Exception):
    """Bad argument value detected after parsing."""


# ----------------------------------------------------------------------
# helpers


def parse_levels(text):
    """``a:b:step`` (inclusive of ``b`` when hit) or a comma separated list."""
    text = text.strip()
    if not text:
        raise UsageError("empty level list")
    if ":" in text:
        try:
            a, b, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise UsageError(f"bad level range {text!r}; expected a:b:step") from None
        if step <= 0 or b < a:
            raise UsageError(f"bad level range {text!r}")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        return [a + k * step for k in range(n)]
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad level list {text!r}") from None
    if not levels:
        raise UsageError("empty level list")
    return levels


def _load_cloud(path, significant=None):
    pts = read_xyz(path)
    if len(pts) == 0:
        raise UsageError(f"{path}: no points")
    if significant is None:
        return PointCloud(pts)
    sig = read_xyz(significant)
    xyz = np.vstack([pts, sig])
    flags = np.r_[np.zeros(len(pts), bool), np.ones(len(sig), bool)]
    return PointCloud(xyz, significant=flags)


def _mask(surf, path):
    if not path:
        return None
    pts = read_xyz(path)
    return surf.occupancy(pts[:, 0], pts[:, 1])


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _thread_limit(n):
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


# ----------------------------------------------------------------------
# commands


def cmd_fit(args):
    if args.config:
        cfg = read_config(args.config)
    else:
        cfg = FitConfig.preset(args.preset)
    over = {}
    if args.max_iterations is not None:
        over["max_iterations"] = args.max_iterations
    if args.threshold is not None:
        over["threshold"] = args.threshold
    if args.tol_sig is not None:
        over["significant_tol"] = args.tol_sig
    if over:
        cfg = cfg.replace(**over)
    timings = {}
    t = time.perf_counter()
    cloud = _load_cloud(args.input, args.significant)
    timings["read"] = time.perf_counter() - t
    t = time.perf_counter()
    surf, rep, history = adaptive_fit(cloud, cfg)
    timings["fit"] = time.perf_counter() - t
    out = _ensure_dir(args.out)
    files = {}
    t = time.perf_counter()
    text = lrsurf_to_string(surf)
    files["surface"] = os.path.join(out, "surface.lrsurf")
    with open(files["surface"], "w") as fh:
        fh.write(text)
    files["report"] = os.path.join(out, "report.txt")
    with open(files["report"], "w") as fh:
        fh.write("setup size_bytes n_coefs max_dist avg_dist lt_0.2 0.2_to_0.5 ge_0.5 out_of_tol\n")
        size, nc, mx, avg, b0, b1, b2 = rep.row(len(text.encode()))
        fh.write(f"{cfg.name} {size} {nc} {mx!r} {avg!r} {b0} {b1} {b2} {rep.out_of_tol}\n")
    files["history"] = os.path.join(out, "history.csv")
    with open(files["history"], "w", newline="") as fh:
        # wall-clock seconds stay in the manifest so this file is reproducible
        cols = [k for k in IterationRecord.HEADER if k != "seconds"]
        w = csv.writer(fh)
        w.writerow(cols)
        for r in history:
            w.writerow([getattr(r, k) for k in cols])
    files["config"] = os.path.join(out, "config.txt")
    with open(files["config"], "w") as fh:
        fh.write(cfg.to_text())
    timings["write"] = time.perf_counter() - t
    manifest = {
        "input": os.path.abspath(args.input),
        "significant": os.path.abspath(args.significant) if args.significant else None,
        "config": args.config or cfg.name,
        "output_dir": os.path.abspath(out),
        "files": {k: os.path.basename(v) for k, v in files.items()},
        "timings": timings,
        "history": [asdict(r) for r in history],
    }
    # wall-clock timings differ between runs; keep them out of the deterministic outputs
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(rep.summary())
    return EXIT_OK


def cmd_export(args):
    surf = read_lrsurf(args.surface)
    if args.what == "raster":
        if args.cellsize is None or not args.cellsize > 0:
            raise UsageError("--cellsize must be a positive number")
        r = raster_from_surface(surf, args.cellsize, _mask(surf, args.mask_input))
        write_asc(r, args.out)
        print(f"wrote {args.out} ({r.nrows} x {r.ncols})")
    else:
        if args.max_segmented < 0:
            raise UsageError("--max-segmented must be >= 0")
        ps = split_to_tp(surf, args.max_segmented)
        names = write_patch_set(ps, _ensure_dir(args.out))
        print(f"wrote {len(names)} patches to {args.out}")
    return EXIT_OK


def cmd_analyze(args):
    surf = read_lrsurf(args.surface)
    what = args.what
    if what in ("contour", "extrema"):
        if args.levels is None:
            raise UsageError("--levels is required")
        levels = parse_levels(args.levels)
        mask = _mask(surf, args.mask_input)
        cs = contour(surf, levels, args.tolerance, mask=mask, max_segmented=args.max_segmented)
        if what == "contour":
            write_contours_csv(cs, args.out)
            print(f"wrote {len(cs)} branches to {args.out}")
        else:
            ex = extremal_points(surf, cs, mask=mask, prominence=args.prominence)
            write_extrema_csv(ex, args.out)
            print(f"wrote {len(ex)} extremal points to {args.out}")
    elif what == "slope":
        if args.cellsize is None or not args.cellsize > 0:
            raise UsageError("--cellsize must be a positive number")
        r = slope(surf, args.cellsize, _mask(surf, args.mask_input))
        write_asc(r, args.out)
    elif what == "limits":
        if not args.input:
            raise UsageError("--input is required for limits")
        cloud = _load_cloud(args.input)
        lower, upper = limit_surfaces(surf, cloud)
        out = _ensure_dir(args.out)
        write_lrsurf(lower, os.path.join(out, "lower.lrsurf"))
        write_lrsurf(upper, os.path.join(out, "upper.lrsurf"))
    elif what == "mid":
        if args.upper:
            upper = read_lrsurf(args.upper)
        elif args.input:
            _, upper = limit_surfaces(surf, _load_cloud(args.input))
        else:
            raise UsageError("mid needs --upper or --input")
        if not args.d1 < args.d2:
            raise UsageError("--d1 must be smaller than --d2")
        write_lrsurf(weighted_mid_surface(surf, upper, args.d1, args.d2), args.out)
    return EXIT_OK


def cmd_accuracy(args):
    pts = read_xyz(args.input)
    if len(pts) == 0:
        raise UsageError(f"{args.input}: no points")
    cloud = PointCloud(pts)
    if args.surface.lower().endswith(".asc"):
        r = read_asc(args.surface)
        est = raster_bilinear_eval(r, cloud.x, cloud.y)
        ok = est != r.nodata
        if np.any(~ok):
            log.warning("%d points outside the raster or next to nodata cells were excluded", int(np.sum(~ok)))
        d = np.abs(cloud.z[ok] - est[ok])
        n = int(d.size)
        if n == 0:
            raise UsageError("no point falls inside the raster")
        bands = (int(np.sum(d < 0.2)), int(np.sum((d >= 0.2) & (d < 0.5))), int(np.sum(d >= 0.5)))
        mx, avg, rms = float(d.max()), float(d.mean()), float(np.sqrt(np.mean(d ** 2)))
        stored = r.size
    else:
        surf = read_lrsurf(args.surface)
        rep, res = compute_accuracy(surf, cloud, args.threshold)
        r_in = res.residuals[res.inside]
        if r_in.size == 0:
            raise UsageError("no point falls inside the surface domain")
        n, bands, mx, avg = rep.n_points, rep.bands, rep.max_dist, rep.avg_dist
        rms = float(np.sqrt(np.mean(r_in ** 2)))
        stored = surf.num_coefs
    print(f"points {n}")
    print(f"stored_values {stored}")
    print(f"max_dist {mx!r}")
    print(f"avg_dist {avg!r}")
    print(f"rmse {rms!r}")
    print(f"bands lt_0.2={bands[0]} 0.2_to_0.5={bands[1]} ge_0.5={bands[2]}")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="lrterrain", description="LR spline terrain fitting and analysis")
    p.add_argument("--threads", type=int, default=None,
                   help=f"cap on worker threads (default from ${THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="adaptive LR surface fit of a point cloud")
    f.add_argument("--input", required=True)
    g = f.add_mutually_exclusive_group()
    g.add_argument("--preset", default="F7", choices=["F7", "V7", "V9", "V9E1", "V9E2", "WM7", "FS7", "FS9"])
    g.add_argument("--config")
    f.add_argument("--out", required=True)
    f.add_argument("--significant", help="xyz file of significant points")
    f.add_argument("--tol-sig", type=float, dest="tol_sig", help="tolerance for significant points")
    f.add_argument("--max-iterations", type=int, dest="max_iterations")
    f.add_argument("--threshold", type=float)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("export", help="raster or tensor-product patch export")
    e.add_argument("what", choices=["raster", "split-tp"])
    e.add_argument("--surface", required=True)
    e.add_argument("--cellsize", type=float)
    e.add_argument("--max-segmented", type=int, default=0, dest="max_segmented")
    e.add_argument("--mask-input", dest="mask_input", help="xyz file defining occupied elements")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)

    a = sub.add_parser("analyze", help="contours, extrema, slope, limit and mid surfaces")
    a.add_argument("what", choices=["contour", "extrema", "slope", "limits", "mid"])
    a.add_argument("--surface", required=True)
    a.add_argument("--levels")
    a.add_argument("--tolerance", type=float, default=1e-9)
    a.add_argument("--max-segmented", type=int, default=0, dest="max_segmented")
    a.add_argument("--prominence", type=float, default=0.0)
    a.add_argument("--cellsize", type=float)
    a.add_argument("--input")
    a.add_argument("--upper")
    a.add_argument("--d1", type=float, default=-20.0)
    a.add_argument("--d2", type=float, default=0.0)
    a.add_argument("--mask-input", dest="mask_input")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("accuracy", help="distances between a surface or raster and a point cloud")
    c.add_argument("--surface", required=True)
    c.add_argument("--input", required=True)
    c.add_argument("--threshold", type=float, default=0.5)
    c.set_defaults(func=cmd_accuracy)

    i = sub.add_parser("idw", help="inverse distance weighted raster of a point cloud")
    i.add_argument("--input", required=True)
    i.add_argument("--cellsize", type=float, required=True)
    i.add_argument("--radius", type=float, default=20.0)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_idw)
    return p


def cmd_idw(args):
    if not args.cellsize > 0 or not args.radius > 0:
        raise UsageError("--cellsize and --radius must be positive")
    r = idw_raster(read_xyz(args.input), args.cellsize, args.radius)
    write_asc(r, args.out)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"error: {THREADS_ENV} must be an integer", file=sys.stderr)
            return EXIT_IO
    try:
        with _thread_limit(threads):
            return args.func(args)
    except (OSError, FormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitError, ContourError, RuntimeError, ValueError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
