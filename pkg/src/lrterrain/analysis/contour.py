"""
Contour curves of spline surfaces.

Each tensor-product piece is subdivided until, in every leaf, one partial
derivative has single-signed coefficients.  Such a leaf holds no closed
level curve, and its level curves are graphs over the other parameter, so
boundary crossings sorted along that parameter pair up consecutively.  Each
pair is traced by a predictor-corrector march, and the pieces are stitched
across leaf and patch interfaces.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, PPoly
from scipy.spatial import cKDTree

from ..bspline import TPSurface, tp_derivative, tp_split
from ..io.split import split_to_tp
from ..lrsurface import LRSurface
from .patch import Patch

log = logging.getLogger(__name__)


class ContourError(RuntimeError):
    """Tracing failed inside a region."""


@dataclass(frozen=True)
class GuidePoint:
    u: float
    v: float
    level: float
    branch: int = -1
    kind: str = "boundary-crossing"


@dataclass
class Connection:
    """Two guide points joined by one level-curve arc inside ``rect``.

    ``axis`` is 0 when ``dF/du`` is single-signed in ``rect`` (the arc is a
    graph over v), 1 when ``dF/dv`` is.
    """

    start: GuidePoint
    end: GuidePoint
    rect: tuple
    axis: int


@dataclass
class Topology:
    connections: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    subdivisions: int = 0
    unresolved: list = field(default_factory=list)

    def chains(self, tol=1e-9):
        """Connections joined end to end: list of ``(guide points, closed)``."""
        segs = [np.array([[c.start.u, c.start.v], [c.end.u, c.end.v]]) for c in self.connections]
        lvl = self.connections[0].start.level if self.connections else 0.0
        merged = _stitch([CurveBranch(lvl, s, False) for s in segs], tol)
        return [([GuidePoint(float(x), float(y), lvl, n) for x, y in b.points], b.closed)
                for n, b in enumerate(merged)]


@dataclass
class CurveBranch:
    level: float
    points: np.ndarray
    closed: bool = False
    ends: str = "boundary"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def length(self):
        pts = np.vstack([self.points, self.points[:1]]) if self.closed else self.points
        return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


class ContourSet(list):
    """List of :class:`CurveBranch` with level helpers."""

    def levels(self):
        return sorted({b.level for b in self})

    def at(self, level):
        return [b for b in self if b.level == level]


# ----------------------------------------------------------------------
# topology


def _edge_roots(knots, degree, coefs, a):
    c = np.asarray(coefs, dtype=float) - a
    if np.all(c > 0) or np.all(c < 0):
        return []
    pp = PPoly.from_spline(BSpline(np.asarray(knots, dtype=float), c, degree))
    r = pp.roots(discontinuity=False, extrapolate=False)
    r = r[np.isfinite(r)]
    lo, hi = knots[degree], knots[-degree - 1]
    r = np.clip(r, lo, hi)
    # a curve touching the edge at a sampled knot shows up once per adjacent piece
    out = []
    for x in np.sort(r):
        if not out or x - out[-1] > 1e-12 * (hi - lo):
            out.append(float(x))
    return out


def _crossings(tp, a, outer, tol):
    C = np.asarray(tp.coefs, dtype=float)
    (u0, u1), (v0, v1) = tp.domain
    pts = []
    for t in _edge_roots(tp.uknots, tp.degree_u, C[:, 0], a):
        pts.append((t, v0))
    for t in _edge_roots(tp.uknots, tp.degree_u, C[:, -1], a):
        pts.append((t, v1))
    for t in _edge_roots(tp.vknots, tp.degree_v, C[0, :], a):
        pts.append((u0, t))
    for t in _edge_roots(tp.vknots, tp.degree_v, C[-1, :], a):
        pts.append((u1, t))
    uniq = []
    for p in pts:
        if all(abs(p[0] - q[0]) > tol or abs(p[1] - q[1]) > tol for q in uniq):
            uniq.append(p)
    (U0, U1), (V0, V1) = outer
    out = []
    for u, v in uniq:
        on_outer = abs(u - U0) <= tol or abs(u - U1) <= tol or abs(v - V0) <= tol or abs(v - V1) <= tol
        out.append(GuidePoint(u, v, a, -1, "boundary-crossing" if on_outer else "subdivision-boundary"))
    return out


def _single_signed(c):
    c = np.asarray(c)
    if c.size == 0:
        return 0.0
    if np.all(c >= 0) and np.any(c > 0):
        return float(c.min()) / float(np.abs(c).max()) + 1e-300
    if np.all(c <= 0) and np.any(c < 0):
        return float(-c.max()) / float(np.abs(c).max()) + 1e-300
    return 0.0


def _split_values(knots, lo, hi):
    inner = np.unique(knots)
    inner = inner[(inner > lo) & (inner < hi)]
    mid = 0.5 * (lo + hi)
    if inner.size == 0:
        return mid, False
    return float(inner[np.argmin(np.abs(inner - mid))]), True


def _subdivide(tp):
    (u0, u1), (v0, v1) = tp.domain
    su, ku = _split_values(tp.uknots, u0, u1)
    sv, kv = _split_values(tp.vknots, v0, v1)
    if ku != kv:
        # knots only in one direction: split there and leave the other for later
        if ku:
            return list(tp_split(tp, 0, su))
        return list(tp_split(tp, 1, sv))
    out = []
    for half in tp_split(tp, 0, su):
        out.extend(tp_split(half, 1, sv))
    return out


def topology_detect(tp, a, depth_cap=30):
    """
    Guide points and their connections for the level curves ``F = a``.

    Returns
    -------
    Topology
        ``connections`` holds one entry per arc inside a leaf region;
        ``unresolved`` lists leaf rectangles where the depth cap was hit.
    """
    if tp.dim != 1:
        raise ValueError("contouring needs a scalar surface")
    outer = tp.domain
    size = max(outer[0][1] - outer[0][0], outer[1][1] - outer[1][0])
    tol = 1e-12 * size
    topo = Topology()
    stack = [(tp, 0)]
    while stack:
        s, depth = stack.pop()
        C = np.asarray(s.coefs)
        if a < C.min() or a > C.max():
            continue
        if C.min() == C.max():
            log.warning("surface is flat at level %g on %s", a, s.domain)
            continue
        pts = _crossings(s, a, outer, tol)
        topo.crossings.extend(p for p in pts if p.kind == "boundary-crossing")
        su = _single_signed(tp_derivative(s, 0).coefs) if s.degree_u > 0 else 0.0
        sv = _single_signed(tp_derivative(s, 1).coefs) if s.degree_v > 0 else 0.0
        if (su > 0 or sv > 0) and len(pts) % 2 == 0:
            axis = 0 if su >= sv else 1
            key = 1 - axis
            pts.sort(key=lambda g: (g.v, g.u) if key == 1 else (g.u, g.v))
            for k in range(0, len(pts), 2):
                topo.connections.append(Connection(pts[k], pts[k + 1], s.domain, axis))
            continue
        if depth >= depth_cap:
            log.warning("contour topology unresolved on %s at level %g", s.domain, a)
            topo.unresolved.append(s.domain)
            continue
        topo.subdivisions += 1
        for kid in _subdivide(s):
            stack.append((kid, depth + 1))
    # crossings on the outer boundary are seen once per leaf touching them
    seen, uniq = set(), []
    for g in topo.crossings:
        k = (round(g.u / tol) if tol else g.u, round(g.v / tol) if tol else g.v)
        if k not in seen:
            seen.add(k)
            uniq.append(g)
    topo.crossings = uniq
    return topo


# ----------------------------------------------------------------------
# tracing


def _solve_line(patch, a, axis, s, lo, hi, x0, ftol):
    """Root of ``F - a`` along the line where the marching coordinate equals ``s``."""

    def f(x):
        D = patch.derivs(x, s, 1) if axis == 0 else patch.derivs(s, x, 1)
        return D[0, 0] - a, (D[1, 0] if axis == 0 else D[0, 1])

    flo, _ = f(lo)
    fhi, _ = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        return None
    x = min(max(x0, lo), hi)
    for _ in range(200):
        fx, dx = f(x)
        if abs(fx) <= ftol:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        step = x - fx / dx if dx != 0 else None
        x = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            return x
    return x


def _tangent(D, sign, m):
    t = np.array([-D[0, 1], D[1, 0]])
    n = math.hypot(t[0], t[1])
    if n == 0:
        return None, 0.0
    t /= n
    if t[m] * sign < 0:
        t = -t
    return t, n


def trace_connection(patch, con, ftol=None, max_steps=200000):
    """
    March along one arc from ``con.start`` to ``con.end``.

    The predictor steps along the tangent ``(-F_v, F_u)`` with a length set
    by first and second derivatives.  The corrector solves for the point on
    the level curve at the predicted marching coordinate, with a bracketed
    Newton iteration.  Steps whose start, chord and end directions disagree
    are halved.
    """
    a = con.start.level
    (u0, u1), (v0, v1) = con.rect
    P = np.array([con.start.u, con.start.v])
    Q = np.array([con.end.u, con.end.v])
    m = 1 - con.axis  # marching coordinate
    x = con.axis      # solved coordinate
    lo, hi = (u0, u1) if x == 0 else (v0, v1)
    sign = 1.0 if Q[m] >= P[m] else -1.0
    diag = math.hypot(patch.u1 - patch.u0, patch.v1 - patch.v0)
    hmin = diag * 1e-4
    if ftol is None:
        ftol = 1e-12 * max(1.0, float(np.abs(patch.C).max()))
    pts = [P]
    cur = P
    if abs(Q[m] - P[m]) <= hmin * 1e-3:
        return np.array([P, Q])
    for _ in range(max_steps):
        D = patch.derivs(cur[0], cur[1], 2)
        t0, g = _tangent(D, sign, m)
        curv = max(abs(D[2, 0]), abs(D[1, 1]), abs(D[0, 2]))
        hmax = max(patch.cell_diameter(cur[0], cur[1]), hmin)
        h = hmax if curv == 0 or t0 is None else min(max(0.5 * g / curv, hmin), hmax)
        if t0 is None:
            t0 = np.zeros(2)
            t0[m] = sign
        while True:
            pred = cur + h * t0
            ds = max(sign * (pred[m] - cur[m]), 0.5 * hmin * abs(t0[m]), 1e-3 * hmin)
            s = cur[m] + sign * ds
            if sign * (s - Q[m]) >= 0:
                pts.append(Q)
                return np.array(pts)
            r = _solve_line(patch, a, con.axis, s, lo, hi, pred[x], ftol)
            if r is None:
                raise ContourError(f"level {a}: lost the curve in region {con.rect} near {tuple(cur)}")
            new = np.empty(2)
            new[m], new[x] = s, r
            if h <= hmin:
                break
            D1 = patch.derivs(new[0], new[1], 1)
            t1, _ = _tangent(D1, sign, m)
            chord = new - cur
            cl = math.hypot(chord[0], chord[1])
            ok = t1 is not None and cl > 0 and t0 @ t1 > 0.7 and (chord @ t0) / cl > 0.7 and (chord @ t1) / cl > 0.7
            if ok:
                break
            h = max(0.5 * h, hmin)
        pts.append(new)
        cur = new
    raise ContourError(f"level {a}: step limit reached in region {con.rect}")


def trace_branch(tp, a, guides, ftol=None):
    """
    Trace a chain of connections (from :func:`topology_detect`) into one branch.

    Parameters
    ----------
    tp : TPSurface
    a : float
    guides : list of Connection
        Consecutive connections must share endpoints.
    """
    if not guides:
        raise ValueError("no guide points to trace")
    patch = tp if isinstance(tp, Patch) else Patch(tp)
    segs = [CurveBranch(a, trace_connection(patch, c, ftol), False) for c in guides]
    size = max(patch.u1 - patch.u0, patch.v1 - patch.v0)
    merged = _stitch(segs, 1e-7 * size)
    if len(merged) != 1:
        raise ValueError("guide connections do not form a single chain")
    return merged[0]


# ----------------------------------------------------------------------
# merging


def _stitch(segs, tol, domain=None):
    if not segs:
        return []
    ends = np.array([[s.points[0], s.points[-1]] for s in segs]).reshape(-1, 2)
    tree = cKDTree(ends)
    partners = [[] for _ in range(ends.shape[0])]
    for i, j in sorted(tree.query_pairs(tol)):
        if i // 2 == j // 2 and len(segs[i // 2].points) <= 2 and np.allclose(ends[i], ends[j]):
            continue
        partners[i].append(j)
        partners[j].append(i)
    branch = [len(p) > 1 for p in partners]
    link = [p[0] if len(p) == 1 and not branch[p[0]] else -1 for p in partners]

    def walk(start_seg, forward):
        pts = []
        seg, fwd = start_seg, forward
        visited = []
        while True:
            visited.append(seg)
            sp = segs[seg].points if fwd else segs[seg].points[::-1]
            pts.extend(sp if not pts else sp[1:])
            exit_end = 2 * seg + (1 if fwd else 0)
            nxt = link[exit_end]
            if nxt < 0:
                return pts, visited, False, exit_end
            nseg = nxt // 2
            if nseg == start_seg and (nxt % 2 == (0 if forward else 1)):
                return pts[:-1], visited, True, exit_end
            if nseg in done:
                return pts, visited, False, exit_end
            done.add(nseg)
            seg, fwd = nseg, nxt % 2 == 0

    out = []
    done = set()
    lvl = segs[0].level
    order = sorted(range(len(segs)), key=lambda k: (link[2 * k] >= 0 and link[2 * k + 1] >= 0, k))
    for k in order:
        if k in done:
            continue
        done.add(k)
        # open chains start at a free end (sorted first); what is left are loops
        pts, _, closed, _ = walk(k, link[2 * k] < 0 or link[2 * k + 1] >= 0)
        arr = np.array(pts)
        ends_kind = "closed" if closed else _end_kind(arr, branch, ends, domain, tol)
        out.append(CurveBranch(lvl, arr, closed, ends_kind))
    return out


def _end_kind(arr, branch, ends, domain, tol):
    if domain is None:
        return "boundary"
    (u0, u1), (v0, v1) = domain

    def on_boundary(p):
        return min(abs(p[0] - u0), abs(p[0] - u1), abs(p[1] - v0), abs(p[1] - v1)) <= tol

    kinds = []
    for p in (arr[0], arr[-1]):
        if on_boundary(p):
            kinds.append("boundary")
        elif any(b and np.hypot(*(ends[i] - p)) <= tol for i, b in enumerate(branch)):
            kinds.append("branch")
        else:
            log.warning("dangling contour endpoint at (%.6g, %.6g)", p[0], p[1])
            kinds.append("dangling")
    return kinds[0] if kinds[0] == kinds[1] else "/".join(kinds)


def merge_across_boundaries(branches, tol=None, domain=None):
    """
    Join open branch pieces whose endpoints meet.

    Pieces are grouped by level; endpoints closer than ``tol`` (default
    ``1e-7`` times the extent of all points) are stitched, reversing pieces
    as needed.  Where more than two endpoints meet (a branch point) nothing
    is stitched.
    """
    branches = list(branches)
    if not branches:
        return ContourSet()
    if tol is None:
        allp = np.vstack([b.points for b in branches])
        tol = 1e-7 * max(float(np.ptp(allp[:, 0])), float(np.ptp(allp[:, 1])), 1e-300)
    out = ContourSet()
    levels = sorted({b.level for b in branches})
    for lvl in levels:
        group = [b for b in branches if b.level == lvl]
        closed = [b for b in group if b.closed]
        opened = [b for b in group if not b.closed]
        out.extend(closed)
        out.extend(_stitch(opened, tol, domain))
    return out


# ----------------------------------------------------------------------
# driver


def _pieces(surf, max_segmented):
    if isinstance(surf, TPSurface):
        return [surf]
    if isinstance(surf, LRSurface):
        return split_to_tp(surf, max_segmented).patches
    raise TypeError("expected an LRSurface or TPSurface")


def _clip_to_mask(branch, surf, mask):
    occ = np.asarray(mask, dtype=bool)[surf.locate(branch.points[:, 0], branch.points[:, 1])]
    if occ.all():
        return [branch]
    out = []
    pts = branch.points
    if branch.closed:
        # rotate so the polyline starts at an unoccupied vertex
        k = int(np.argmin(occ))
        pts = np.roll(pts, -k, axis=0)
        occ = np.roll(occ, -k)
    run = []
    for p, o in zip(pts, occ):
        if o:
            run.append(p)
        elif run:
            if len(run) > 1:
                out.append(CurveBranch(branch.level, np.array(run), False, "mask"))
            run = []
    if len(run) > 1:
        out.append(CurveBranch(branch.level, np.array(run), False, "mask"))
    return out


def contour(surf, levels, tolerance=1e-9, mask=None, max_segmented=0, depth_cap=30):
    """
    Level curves of ``surf`` at each level.

    Parameters
    ----------
    surf : LRSurface or TPSurface
    levels : sequence of float
    tolerance : float
        Bound on ``|F - a|`` at every vertex.
    mask : array of bool, optional
        Per-element occupancy of an LR surface; curve parts in unoccupied
        elements are removed.
    max_segmented : int
        Passed to :func:`split_to_tp`.

    Returns
    -------
    ContourSet
    """
    levels = [float(a) for a in np.atleast_1d(levels)]
    if not levels:
        return ContourSet()
    if not all(np.isfinite(levels)):
        raise ValueError("levels must be finite")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    pieces = [Patch(tp) for tp in _pieces(surf, max_segmented)]
    (u0, u1), (v0, v1) = surf.domain
    size = max(u1 - u0, v1 - v0)
    out = ContourSet()
    for a in levels:
        segs = []
        for patch in pieces:
            C = patch.C
            if a < C.min() or a > C.max():
                continue
            topo = topology_detect(patch.tp, a, depth_cap)
            ftol = min(tolerance, 1e-12 * max(1.0, float(np.abs(C).max())))
            for con in topo.connections:
                segs.append(CurveBranch(a, trace_connection(patch, con, ftol), False))
        merged = merge_across_boundaries(segs, 1e-7 * size, surf.domain)
        if mask is not None and isinstance(surf, LRSurface):
            merged = [c for b in merged for c in _clip_to_mask(b, surf, mask)]
        out.extend(merged)
    return out
