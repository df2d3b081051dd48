"""
Text file formats: XYZ point clouds, the ``LRSURF 1`` surface format,
ESRI ASCII grids and the contour / extremal point CSV tables.
"""

import csv
import os

import numpy as np

from ..lrsurface import LRSurface
from .raster import Raster


class FormatError(ValueError):
    """Raised when a file does not follow its format."""


def _fmt(x):
    return repr(float(x))


# ----------------------------------------------------------------------
# XYZ


def read_xyz(path):
    """
    Read whitespace separated ``x y z`` lines.

    Blank lines and lines starting with ``#`` are skipped.  Returns an
    ``(n, 3)`` float array.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 values, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_xyz(points, path):
    pts = np.asarray(points, dtype=float)
    with open(path, "w") as fh:
        for x, y, z in pts:
            fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}\n")


# ----------------------------------------------------------------------
# LR surfaces


def lrsurf_to_string(surf):
    p, q = surf.degrees
    lines = ["LRSURF 1", f"{p} {q} {surf.dim}"]
    lines.append(" ".join([str(surf.uvals.size)] + [_fmt(x) for x in surf.uvals]))
    lines.append(" ".join([str(surf.vvals.size)] + [_fmt(x) for x in surf.vvals]))
    lines.append(str(surf.num_coefs))
    iu = np.searchsorted(surf.uvals, surf.uknot_matrix)
    iv = np.searchsorted(surf.vvals, surf.vknot_matrix)
    C = np.asarray(surf.coefs).reshape(surf.num_coefs, surf.dim)
    for k in range(surf.num_coefs):
        fields = [str(int(i)) for i in iu[k]] + [str(int(j)) for j in iv[k]]
        fields.append(_fmt(surf.scales[k]))
        fields.extend(_fmt(c) for c in C[k])
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def write_lrsurf(surf, path):
    with open(path, "w") as fh:
        fh.write(lrsurf_to_string(surf))


def lrsurf_from_string(text, source="<string>"):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        head = lines[0].split()
        if head != ["LRSURF", "1"]:
            raise FormatError(f"{source}: unsupported header {lines[0]!r}")
        p, q, dim = (int(x) for x in lines[1].split())
        urow = lines[2].split()
        vrow = lines[3].split()
        nu, nv = int(urow[0]), int(vrow[0])
        uvals = np.array([float(x) for x in urow[1:]])
        vvals = np.array([float(x) for x in vrow[1:]])
        if uvals.size != nu or vvals.size != nv:
            raise FormatError(f"{source}: knot count mismatch")
        if np.any(np.diff(uvals) <= 0) or np.any(np.diff(vvals) <= 0):
            raise FormatError(f"{source}: global knot values must be strictly increasing")
        nb = int(lines[4])
        body = lines[5:5 + nb]
        if len(body) != nb:
            raise FormatError(f"{source}: expected {nb} B-spline lines, found {len(body)}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{source}: malformed header ({exc})") from None
    keys, scales, coefs = [], [], []
    width = (p + 2) + (q + 2) + 1 + dim
    for n, row in enumerate(body, start=6):
        f = row.split()
        if len(f) != width:
            raise FormatError(f"{source}:{n}: expected {width} fields, got {len(f)}")
        try:
            iu = [int(x) for x in f[:p + 2]]
            iv = [int(x) for x in f[p + 2:p + q + 4]]
            s = float(f[p + q + 4])
            c = [float(x) for x in f[p + q + 5:]]
        except ValueError as exc:
            raise FormatError(f"{source}:{n}: {exc}") from None
        if min(iu) < 0 or max(iu) >= nu or min(iv) < 0 or max(iv) >= nv:
            raise FormatError(f"{source}:{n}: knot index out of range")
        if any(b < a for a, b in zip(iu, iu[1:])) or any(b < a for a, b in zip(iv, iv[1:])):
            raise FormatError(f"{source}:{n}: knot indices must be non-decreasing")
        if iu[-1] == iu[0] or iv[-1] == iv[0]:
            raise FormatError(f"{source}:{n}: degenerate support")
        if not s > 0:
            raise FormatError(f"{source}:{n}: scale must be positive, got {s}")
        keys.append((tuple(float(uvals[i]) for i in iu), tuple(float(vvals[j]) for j in iv)))
        scales.append(s)
        coefs.append(c)
    return LRSurface.from_bsplines((p, q), uvals, vvals, keys, scales, np.array(coefs).reshape(nb, dim))


def read_lrsurf(path):
    with open(path) as fh:
        return lrsurf_from_string(fh.read(), source=str(path))


# ----------------------------------------------------------------------
# ESRI ASCII grid

_ASC_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value")


def write_asc(r, path):
    with open(path, "w") as fh:
        fh.write(f"ncols {r.ncols}\n")
        fh.write(f"nrows {r.nrows}\n")
        fh.write(f"xllcorner {_fmt(r.xll)}\n")
        fh.write(f"yllcorner {_fmt(r.yll)}\n")
        fh.write(f"cellsize {_fmt(r.cellsize)}\n")
        fh.write(f"NODATA_value {_fmt(r.nodata)}\n")
        for row in r.values:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")


def read_asc(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = {}
    for n, key in enumerate(_ASC_KEYS):
        try:
            k, v = lines[n].split()
        except (IndexError, ValueError):
            raise FormatError(f"{path}:{n + 1}: malformed header line") from None
        if k.lower() != key.lower():
            raise FormatError(f"{path}:{n + 1}: expected {key}, got {k}")
        head[key] = v
    try:
        ncols, nrows = int(head["ncols"]), int(head["nrows"])
        vals = np.array([[float(x) for x in ln.split()] for ln in lines[6:6 + nrows]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if vals.shape != (nrows, ncols):
        raise FormatError(f"{path}: expected {nrows}x{ncols} values, got {vals.shape}")
    return Raster(ncols, nrows, float(head["xllcorner"]), float(head["yllcorner"]),
                  float(head["cellsize"]), float(head["NODATA_value"]), vals)


# ----------------------------------------------------------------------
# CSV tables


def write_contours_csv(contours, path):
    """Write contour branches as ``level,curve_id,closed,seq,x,y`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "curve_id", "closed", "seq", "x", "y"])
        for cid, br in enumerate(contours):
            for seq, (x, y) in enumerate(br.points):
                w.writerow([_fmt(br.level), cid, int(br.closed), seq, _fmt(x), _fmt(y)])


def read_contours_csv(path):
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = int(row["curve_id"])
            rec = out.setdefault(key, {"level": float(row["level"]), "closed": bool(int(row["closed"])), "points": []})
            rec["points"].append((float(row["x"]), float(row["y"])))
    return [out[k] for k in sorted(out)]


def write_extrema_csv(points, path):
    """Write extremal points as ``kind,x,y,z,trigger_level`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "x", "y", "z", "trigger_level"])
        for e in points:
            w.writerow([e.kind, _fmt(e.x), _fmt(e.y), _fmt(e.z), _fmt(e.trigger_level)])


def write_patch_set(patchset, outdir, stem="patch"):
    """Write each patch as ``<stem>_NNN.lrsurf`` plus an ``adjacency.txt`` listing."""
    os.makedirs(outdir, exist_ok=True)
    names = []
    width = max(3, len(str(len(patchset.patches))))
    for n, (tp, rect) in enumerate(zip(patchset.patches, patchset.rects)):
        name = f"{stem}_{n:0{width}d}.lrsurf"
        write_lrsurf(LRSurface.from_tensor_product(tp), os.path.join(outdir, name))
        names.append(name)
    with open(os.path.join(outdir, "adjacency.txt"), "w") as fh:
        fh.write("# patch u0 u1 v0 v1\n")
        for n, ((u0, u1), (v0, v1)) in enumerate(patchset.rects):
            fh.write(f"{n} {_fmt(u0)} {_fmt(u1)} {_fmt(v0)} {_fmt(v1)}\n")
        fh.write("# a b (shared interface)\n")
        for a, b in patchset.adjacency:
            fh.write(f"{a} {b}\n")
    return names
