"""
Local extrema located from contour curves.

An innermost closed contour, or a contour meeting the boundary together
with the smaller piece of boundary it cuts off, encloses a region that must
contain a maximum or a minimum.  The region is searched by convex-hull
pruning and subdivision of a tensor-product patch until the control net is
unimodal, where a Newton iteration on the gradient finds the critical point.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..bspline import TPSurface, tp_restrict
from ..lrsurface import LRSurface
from .contour import _subdivide
from .patch import Patch

log = logging.getLogger(__name__)


@dataclass
class ExtremalPoint:
    x: float
    y: float
    z: float
    kind: str
    trigger_level: float
    trigger: int = -1
    inside_mask: bool = True
    on_boundary: bool = False
    fallback: bool = False


def point_in_polygon(px, py, poly):
    """Even-odd rule; ``poly`` is an ``(m, 2)`` vertex array (implicitly closed)."""
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    inside = np.zeros(px.shape, dtype=bool)
    for a, b, c, d in zip(x0, y0, x1, y1):
        cond = (b > py) != (d > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a + (py - b) * (c - a) / (d - b)
        inside ^= cond & (px < xc)
    return inside


def polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _perimeter_coord(p, domain):
    (u0, u1), (v0, v1) = domain
    w, h = u1 - u0, v1 - v0
    dist = [abs(p[1] - v0), abs(p[0] - u1), abs(p[1] - v1), abs(p[0] - u0)]
    side = int(np.argmin(dist))
    if side == 0:
        return p[0] - u0
    if side == 1:
        return w + p[1] - v0
    if side == 2:
        return w + h + u1 - p[0]
    return 2 * w + h + v1 - p[1]


def _boundary_path(s_from, s_to, domain):
    """Corner points met walking counter-clockwise along the boundary from ``s_from`` to ``s_to``."""
    (u0, u1), (v0, v1) = domain
    w, h = u1 - u0, v1 - v0
    per = 2 * (w + h)
    corners = [(w, (u1, v0)), (w + h, (u1, v1)), (2 * w + h, (u0, v1)), (per, (u0, v0))]
    length = (s_to - s_from) % per
    out = []
    for c, xy in corners + [(c + per, xy) for c, xy in corners]:
        if s_from < c < s_from + length:
            out.append(xy)
    return out


def region_polygon(branch, domain):
    """Polygon enclosed by a closed branch, or by an open branch and the smaller boundary piece."""
    pts = branch.points
    if branch.closed:
        return pts
    sa = _perimeter_coord(pts[0], domain)
    sb = _perimeter_coord(pts[-1], domain)
    # from the end of the branch back to its start, either way round
    ccw = np.vstack([pts, np.array(_boundary_path(sb, sa, domain)).reshape(-1, 2)])
    cw = np.vstack([pts[::-1], np.array(_boundary_path(sa, sb, domain)).reshape(-1, 2)])
    return ccw if polygon_area(ccw) <= polygon_area(cw) else cw


def _gradient(surf, x, y):
    return np.array([float(surf.evaluate(x, y, 1, 0)), float(surf.evaluate(x, y, 0, 1))])


def region_kind(surf, branch, poly):
    """``'max'`` if the surface rises into the region, else ``'min'``."""
    pts = branch.points
    n = len(pts)
    idx = np.unique(np.linspace(0, n - 1, min(n, 7)).round().astype(int))
    if not branch.closed and n > 2:
        idx = idx[(idx > 0) & (idx < n - 1)] if np.any((idx > 0) & (idx < n - 1)) else idx
    votes = 0
    for k in idx:
        p = pts[k]
        g = _gradient(surf, p[0], p[1])
        gn = math.hypot(*g)
        if gn == 0:
            continue
        nb = [pts[max(k - 1, 0)], pts[min(k + 1, n - 1)]]
        eps = 1e-3 * max(min(math.hypot(*(p - q)) for q in nb if math.hypot(*(p - q)) > 0), 1e-12) \
            if any(math.hypot(*(p - q)) > 0 for q in nb) else 1e-9
        q = p + eps * g / gn
        votes += 1 if point_in_polygon(q[0], q[1], poly)[0] else -1
    return "max" if votes > 0 else "min"


def _unimodal(C):
    def ok(rows):
        for r in rows:
            d = np.sign(np.diff(r))
            d = d[d != 0]
            if np.count_nonzero(d[1:] != d[:-1]) > 1:
                return False
        return True

    return ok(C) and ok(C.T)


def _greville_2d(tp, i, j):
    p, q = tp.degree_u, tp.degree_v
    gu = float(np.mean(tp.uknots[i + 1:i + p + 1])) if p else 0.5 * (tp.uknots[i] + tp.uknots[i + 1])
    gv = float(np.mean(tp.vknots[j + 1:j + q + 1])) if q else 0.5 * (tp.vknots[j] + tp.vknots[j + 1])
    return gu, gv


def newton_critical(patch, x0, sgn, gtol=1e-10, max_iter=60):
    """
    Newton iteration on the gradient from ``x0``.

    Returns the critical point if it converges inside the patch with the
    Hessian of the requested sign (``sgn = 1`` for a maximum), else ``None``.
    """
    x = np.array(x0, dtype=float)
    size = max(patch.u1 - patch.u0, patch.v1 - patch.v0)
    for _ in range(max_iter):
        if not (patch.u0 <= x[0] <= patch.u1 and patch.v0 <= x[1] <= patch.v1):
            return None
        D = patch.derivs(x[0], x[1], 2)
        g = np.array([D[1, 0], D[0, 1]])
        H = np.array([[D[2, 0], D[1, 1]], [D[1, 1], D[0, 2]]])
        if math.hypot(*g) < gtol:
            ev = np.linalg.eigvalsh(H)
            return x if np.all(sgn * ev < 0) else None
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return None
        # keep the iteration moving uphill for a maximum, downhill for a minimum
        if sgn * (g @ step) < 0:
            step = sgn * g / max(abs(H).max(), 1e-300)
        sn = math.hypot(*step)
        if sn > 0.25 * size:
            step *= 0.25 * size / sn
        x = x + step
        if sn < 1e-15 * size:
            D = patch.derivs(x[0], x[1], 2)
            g = np.array([D[1, 0], D[0, 1]])
            H = np.array([[D[2, 0], D[1, 1]], [D[1, 1], D[0, 2]]])
            ok = math.hypot(*g) < 1e-7 and np.all(sgn * np.linalg.eigvalsh(H) < 0)
            return x if ok else None
    return None


def _search(tp, patch, poly, sgn, admissible, best, depth, cap):
    C = sgn * np.asarray(tp.coefs)
    if best[0] is not None and C.max() <= best[1]:
        return
    uni = _unimodal(C)
    if uni or depth >= cap:
        i, j = np.unravel_index(int(np.argmax(C)), C.shape)
        x = newton_critical(patch, _greville_2d(tp, i, j), sgn)
        if x is not None and point_in_polygon(x[0], x[1], poly)[0] and admissible(x):
            val = sgn * patch.value(x[0], x[1])
            if best[0] is None or val > best[1]:
                best[0], best[1] = x, val
        if uni:
            return
    if depth >= cap:
        return
    kids = _subdivide(tp)
    kids.sort(key=lambda k: -(sgn * np.asarray(k.coefs)).max())
    for kid in kids:
        _search(kid, patch, poly, sgn, admissible, best, depth + 1, cap)


def _multistart(patch, poly, sgn, admissible, n=24):
    xs = np.linspace(poly[:, 0].min(), poly[:, 0].max(), n + 2)[1:-1]
    ys = np.linspace(poly[:, 1].min(), poly[:, 1].max(), n + 2)[1:-1]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    keep = point_in_polygon(X, Y, poly)
    keep &= np.array([admissible((a, b)) for a, b in zip(X, Y)], dtype=bool)
    if not np.any(keep):
        return None
    X, Y = X[keep], Y[keep]
    vals = np.array([sgn * patch.value(a, b) for a, b in zip(X, Y)])
    best = None
    for k in np.argsort(-vals)[:6]:
        x = newton_critical(patch, (X[k], Y[k]), sgn)
        if x is not None and point_in_polygon(x[0], x[1], poly)[0] and admissible(x):
            v = sgn * patch.value(x[0], x[1])
            if best is None or v > best[1]:
                best = (x, v)
    return best


def _boundary_extreme(patch, poly, sgn, domain, tol):
    """Best point on the parts of the domain boundary lying on the region boundary."""
    (u0, u1), (v0, v1) = domain
    best = None
    m = len(poly)
    for k in range(m):
        a, b = poly[k], poly[(k + 1) % m]
        on_u = abs(a[0] - b[0]) <= tol and (abs(a[0] - u0) <= tol or abs(a[0] - u1) <= tol)
        on_v = abs(a[1] - b[1]) <= tol and (abs(a[1] - v0) <= tol or abs(a[1] - v1) <= tol)
        if not (on_u or on_v) or math.hypot(*(b - a)) <= tol:
            continue

        def f(t, a=a, b=b):
            p = a + t * (b - a)
            return -sgn * patch.value(min(max(p[0], patch.u0), patch.u1), min(max(p[1], patch.v0), patch.v1))

        ts = np.linspace(0, 1, 33)
        fv = [f(t) for t in ts]
        k0 = int(np.argmin(fv))
        lo, hi = ts[max(k0 - 1, 0)], ts[min(k0 + 1, 32)]
        r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        t, val = (r.x, -r.fun) if r.fun < fv[k0] else (ts[k0], -fv[k0])
        if best is None or val > best[1]:
            best = (a + t * (b - a), val)
    return best


def _region_patch(surf, poly):
    (U0, U1), (V0, V1) = surf.domain
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    pad = 1e-9 * max(U1 - U0, V1 - V0)
    ur = (max(U0, lo[0] - pad), min(U1, hi[0] + pad))
    vr = (max(V0, lo[1] - pad), min(V1, hi[1] + pad))
    tp = surf.tensor_product() if isinstance(surf, LRSurface) else surf
    return tp_restrict(tp, ur, vr)


def trigger_regions(surf, contours):
    """``(index, polygon, kind)`` for every contour region holding no same-kind region."""
    regions = []
    for k, br in enumerate(contours):
        if len(br.points) < 2 or (br.closed and len(br.points) < 3):
            continue
        if not br.closed and br.ends != "boundary":
            continue
        poly = region_polygon(br, surf.domain)
        if len(poly) < 3:
            continue
        regions.append((k, poly, region_kind(surf, br, poly), polygon_area(poly)))
    out = []
    for k, poly, kind, area in regions:
        nested = False
        for k2, poly2, kind2, area2 in regions:
            if k2 == k or kind2 != kind or area2 >= area:
                continue
            probe = poly2[len(poly2) // 2]
            if point_in_polygon(probe[0], probe[1], poly)[0]:
                nested = True
                break
        if not nested:
            out.append((k, poly, kind))
    return out


def extremal_points(surf, contours, mask=None, prominence=0.0, depth_cap=20):
    """
    Extremal points triggered by ``contours``.

    Parameters
    ----------
    surf : LRSurface or TPSurface
    contours : sequence of CurveBranch
    mask : array of bool, optional
        Per-element occupancy of an LR surface; points are searched inside
        the occupied region, falling back to sampled start points.
    prominence : float
        Extrema closer than this to their trigger level are dropped.

    Returns
    -------
    list of ExtremalPoint
    """
    contours = list(contours)
    (U0, U1), (V0, V1) = surf.domain
    size = max(U1 - U0, V1 - V0)
    tol = 1e-7 * size

    def occupied(x):
        if mask is None or not isinstance(surf, LRSurface):
            return True
        return bool(np.asarray(mask, dtype=bool)[surf.locate(x[0], x[1])[0]])

    found = []
    n_fallback = 0
    for k, poly, kind in trigger_regions(surf, contours):
        sgn = 1.0 if kind == "max" else -1.0
        level = contours[k].level
        tp = _region_patch(surf, poly)
        patch = Patch(tp)
        best = [None, -np.inf]
        _search(tp, patch, poly, sgn, lambda x: True, best, 0, depth_cap)
        fallback = False
        if best[0] is not None and not occupied(best[0]):
            alt = _multistart(patch, poly, sgn, occupied)
            fallback = True
            best = [None, -np.inf] if alt is None else [alt[0], alt[1]]
        elif best[0] is None:
            alt = _multistart(patch, poly, sgn, occupied)
            fallback = True
            if alt is not None:
                best = [alt[0], alt[1]]
        on_boundary = False
        if not contours[k].closed:
            bb = _boundary_extreme(patch, poly, sgn, surf.domain, tol)
            if bb is not None and (best[0] is None or bb[1] > best[1]) and occupied(bb[0]):
                best = [bb[0], bb[1]]
                on_boundary = True
        if best[0] is None:
            continue
        n_fallback += fallback
        x, y = float(best[0][0]), float(best[0][1])
        z = float(surf.evaluate(x, y))
        if abs(z - level) < prominence:
            continue
        found.append(ExtremalPoint(x, y, z, "max" if z > level else "min", level, k,
                                   occupied((x, y)), on_boundary, fallback))
    if n_fallback:
        log.info("%d of %d extremal points used the sampled fallback", n_fallback, len(found))
    # one extremum can be triggered by several regions
    out = []
    for e in sorted(found, key=lambda e: (-abs(e.z - e.trigger_level), e.x, e.y)):
        if all(math.hypot(e.x - o.x, e.y - o.y) > tol or e.kind != o.kind for o in out):
            out.append(e)
    return out
