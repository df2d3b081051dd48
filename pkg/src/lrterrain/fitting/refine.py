"""Choice of meshlines for elements that miss their tolerance."""

import numpy as np

from ..lrsurface import Meshline


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def _gaps(vals, mult_row, a, b):
    """Maximal sub-intervals of ``[a, b]`` where ``mult_row`` (per segment of ``vals``) is zero."""
    j0, j1 = np.searchsorted(vals, [a, b])
    out = []
    start = None
    for j in range(j0, j1):
        if mult_row[j] == 0:
            if start is None:
                start = vals[j]
        elif start is not None:
            out.append((float(start), float(vals[j])))
            start = None
    if start is not None:
        out.append((float(start), float(vals[j1])))
    return out


def _too_small(boxes, direction, x, a, b, hmin):
    """Would a line ``direction = x`` over ``(a, b)`` cut some element below ``hmin``?"""
    if direction == "u":
        lo, hi, s0, s1 = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    else:
        lo, hi, s0, s1 = boxes[:, 2], boxes[:, 3], boxes[:, 0], boxes[:, 1]
    cut = (lo < x) & (x < hi) & (s0 < b) & (s1 > a)
    if not np.any(cut):
        return False
    piece = np.minimum(x - lo[cut], hi[cut] - x)
    return bool(np.any(piece < hmin * (1 - 1e-12)))


def select_refinements(surf, report, config=None):
    """
    Meshlines that split every element holding an out-of-tolerance point.

    The element is halved across its longer side (both sides when square).
    Each line spans the support of the overlapping B-spline with the
    shortest extent along the line, so at least one B-spline is split.
    Overlapping lines at the same value are merged and parts already
    present in the mesh are dropped.

    Returns
    -------
    list of Meshline
    """
    bad = np.nonzero(report.elem_out > 0)[0]
    if bad.size == 0:
        return []
    hmin = getattr(config, "min_element_size", None) if config is not None else None
    boxes = surf.element_boxes()
    ptr, idx = surf.element_bspline_lists()
    U, V = surf.uknot_matrix, surf.vknot_matrix
    spans = {}
    for e in bad:
        u0, u1, v0, v1 = boxes[e]
        wu, wv = u1 - u0, v1 - v0
        if abs(wu - wv) <= 1e-12 * max(wu, wv):
            dirs = ["u", "v"]
        elif wu > wv:
            dirs = ["u", "v"] if hmin is not None else ["u"]
        else:
            dirs = ["v", "u"] if hmin is not None else ["v"]
        square = len(dirs) == 2 and abs(wu - wv) <= 1e-12 * max(wu, wv)
        ov = idx[ptr[e]:ptr[e + 1]]
        for d in dirs:
            if d == "u":
                x, width, ext = 0.5 * (u0 + u1), wu, V[ov][:, [0, -1]]
                h = None if hmin is None else hmin[0]
            else:
                x, width, ext = 0.5 * (v0 + v1), wv, U[ov][:, [0, -1]]
                h = None if hmin is None else hmin[1]
            if h is not None and 0.5 * width < h * (1 - 1e-12):
                continue
            order = np.lexsort((ov, ext[:, 1] - ext[:, 0]))
            chosen = None
            for k in order:
                a, b = float(ext[k, 0]), float(ext[k, 1])
                if h is None or not _too_small(boxes, d, x, a, b, h):
                    chosen = (a, b)
                    break
            if chosen is None:
                continue
            spans.setdefault((d, float(x)), []).append(chosen)
            if not square:
                break
    mu, mv = surf.multiplicity_grids()
    out = []
    for (d, x) in sorted(spans):
        for a, b in _merge(spans[(d, x)]):
            if d == "u":
                vals, other, grid = surf.uvals, surf.vvals, mu
            else:
                vals, other, grid = surf.vvals, surf.uvals, mv
            i = np.searchsorted(vals, x)
            if i < vals.size and vals[i] == x:
                parts = _gaps(other, grid[i], a, b)
            else:
                parts = [(a, b)]
            out.extend(Meshline(d, x, s, t) for s, t in parts)
    return out
