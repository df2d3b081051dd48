"""
Conversion of an LR surface into tensor-product patches.

A patch on a rectangle bounded by knot lines is obtained purely by knot
insertion: every LR B-spline touching the rectangle is refined into the
patch's clamped knot vectors, and the resulting weights are accumulated into
the tensor-product coefficients.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..bspline import TPSurface, insert_knot

log = logging.getLogger(__name__)


@dataclass
class TPPatchSet:
    """Tensor-product patches tiling an LR surface domain."""

    patches: list
    rects: list
    adjacency: list = field(default_factory=list)

    def __len__(self):
        return len(self.patches)

    def find(self, u, v):
        """Index of the patch containing ``(u, v)`` (first match)."""
        for n, ((u0, u1), (v0, v1)) in enumerate(self.rects):
            if u0 <= u <= u1 and v0 <= v <= v1:
                return n
        raise ValueError("point outside all patches")

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.full(u.shape, np.nan)
        for tp, ((u0, u1), (v0, v1)) in zip(self.patches, self.rects):
            m = np.isnan(out) & (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1)
            if np.any(m):
                out[m] = tp(u[m], v[m])
        return out


def refine_local(knots, degree, target):
    """
    Express one B-spline in the basis of a clamped target knot vector.

    Parameters
    ----------
    knots : sequence of float, length ``degree + 2``
    target : ndarray
        Clamped knot vector of the target space; it must contain every knot
        of ``knots`` lying strictly inside the target interval, with at least
        the same multiplicity.

    Returns
    -------
    dict
        ``{index: weight}`` for the target B-splines that carry the
        restriction of the B-spline to the target interval.
    """
    t = tuple(float(x) for x in knots)
    p = degree
    lo, hi = float(target[0]), float(target[-1])
    vals, mult = np.unique(target, return_counts=True)
    parts = {t: 1.0}
    for x, m in zip(vals, mult):
        x = float(x)
        if not t[0] < x < t[-1]:
            continue
        for _ in range(int(m) - t.count(x)):
            nxt = {}
            for k, w in parts.items():
                if k[0] < x < k[-1] and k.count(x) < m:
                    k1, k2, a1, a2 = insert_knot(k, p, x)
                    for kk, aa in ((tuple(k1.tolist()), a1), (tuple(k2.tolist()), a2)):
                        if aa != 0.0:
                            nxt[kk] = nxt.get(kk, 0.0) + w * aa
                else:
                    nxt[k] = nxt.get(k, 0.0) + w
            parts = nxt
    windows = {tuple(float(x) for x in target[i:i + p + 2]): i for i in range(target.size - p - 1)}
    out = {}
    for k, w in parts.items():
        if k[0] >= lo and k[-1] <= hi and k[-1] > k[0]:
            i = windows.get(k)
            if i is None:
                raise RuntimeError("refined B-spline is not part of the target space")
            out[i] = out.get(i, 0.0) + w
    return out


def _target_knots(vals, mult, p):
    inner = np.repeat(vals[1:-1], mult[1:-1])
    return np.concatenate([np.full(p + 1, vals[0]), inner, np.full(p + 1, vals[-1])])


def patch_on_rectangle(surf, urange, vrange):
    """Tensor-product surface equal to ``surf`` on ``urange x vrange``."""
    p, q = surf.degrees
    mu, mv = surf.multiplicity_grids()
    uv, vv = surf.uvals, surf.vvals
    i0, i1 = np.searchsorted(uv, urange)
    j0, j1 = np.searchsorted(vv, vrange)
    if uv[i0] != urange[0] or uv[i1] != urange[1] or vv[j0] != vrange[0] or vv[j1] != vrange[1]:
        raise ValueError("patch rectangle must be bounded by knot values")
    umult = np.concatenate([[p + 1], mu[i0 + 1:i1, j0:j1].max(axis=1) if i1 - i0 > 1 else [], [p + 1]]).astype(int)
    vmult = np.concatenate([[q + 1], mv[j0 + 1:j1, i0:i1].max(axis=1) if j1 - j0 > 1 else [], [q + 1]]).astype(int)
    ukeep = umult > 0
    vkeep = vmult > 0
    U = _target_knots(uv[i0:i1 + 1][ukeep], umult[ukeep], p)
    V = _target_knots(vv[j0:j1 + 1][vkeep], vmult[vkeep], q)
    n1, n2 = U.size - p - 1, V.size - q - 1
    C = np.zeros((n1, n2, surf.dim))
    Uk, Vk = surf.uknot_matrix, surf.vknot_matrix
    S = surf.scales
    coefs = np.asarray(surf.coefs).reshape(surf.num_coefs, surf.dim)
    hit = ((Uk[:, 0] < urange[1]) & (Uk[:, -1] > urange[0])
           & (Vk[:, 0] < vrange[1]) & (Vk[:, -1] > vrange[0]))
    ucache, vcache = {}, {}
    for b in np.nonzero(hit)[0]:
        uk, vk = tuple(Uk[b]), tuple(Vk[b])
        wu = ucache.get(uk)
        if wu is None:
            wu = ucache[uk] = refine_local(uk, p, U)
        wv = vcache.get(vk)
        if wv is None:
            wv = vcache[vk] = refine_local(vk, q, V)
        cb = S[b] * coefs[b]
        for i, a in wu.items():
            for j, bb in wv.items():
                C[i, j] += a * bb * cb
    if surf.dim == 1:
        C = C[:, :, 0]
    return TPSurface(U, V, p, q, C)


def _segmented_count(mu, mv, box):
    i0, i1, j0, j1 = box
    n = 0
    if i1 - i0 > 1:
        seg = mu[i0 + 1:i1, j0:j1] > 0
        n += int(np.sum(seg.any(axis=1) & ~seg.all(axis=1)))
    if j1 - j0 > 1:
        seg = mv[j0 + 1:j1, i0:i1] > 0
        n += int(np.sum(seg.any(axis=1) & ~seg.all(axis=1)))
    return n


def _candidates(mu, mv, box):
    """Yield ``(direction, index, crossed, span)`` for lines with T-joints."""
    i0, i1, j0, j1 = box
    for i in range(i0 + 1, i1):
        line = mu[i, j0:j1] > 0
        if not line.any():
            continue
        ends = ((mv[j0 + 1:j1, i - 1] > 0) != (mv[j0 + 1:j1, i] > 0)) if j1 - j0 > 1 else np.zeros(0, bool)
        if not ends.any():
            continue
        gap = ~line
        # an element crossed by the extension ends where a v-line touches either side
        split = (mv[j0 + 1:j1, i - 1] > 0) | (mv[j0 + 1:j1, i] > 0)
        starts = gap.copy()
        starts[1:] &= ~gap[:-1] | split
        yield 0, i, int(starts.sum()), j1 - j0
    for j in range(j0 + 1, j1):
        line = mv[j, i0:i1] > 0
        if not line.any():
            continue
        ends = ((mu[i0 + 1:i1, j - 1] > 0) != (mu[i0 + 1:i1, j] > 0)) if i1 - i0 > 1 else np.zeros(0, bool)
        if not ends.any():
            continue
        gap = ~line
        split = (mu[i0 + 1:i1, j - 1] > 0) | (mu[i0 + 1:i1, j] > 0)
        starts = gap.copy()
        starts[1:] &= ~gap[:-1] | split
        yield 1, j, int(starts.sum()), i1 - i0


def _weights(depth, depth_max=8):
    wa = 0.9 - 0.8 * min(depth, depth_max) / depth_max
    return wa, 1.0 - wa


def split_boxes(surf, max_segmented):
    """Index boxes ``(i0, i1, j0, j1)`` of the recursive split."""
    if max_segmented < 0:
        raise ValueError("max_segmented must be non-negative")
    mu, mv = surf.multiplicity_grids()
    root = (0, surf.uvals.size - 1, 0, surf.vvals.size - 1)
    out = []
    stack = [(root, 0)]
    while stack:
        box, depth = stack.pop()
        if _segmented_count(mu, mv, box) <= max_segmented:
            out.append(box)
            continue
        i0, i1, j0, j1 = box
        wa, wb = _weights(depth)
        best = None
        for direction, idx, crossed, nseg in _candidates(mu, mv, box):
            if direction == 0:
                left, right = idx - i0, i1 - idx
            else:
                left, right = idx - j0, j1 - idx
            score = wa * crossed / nseg + wb * abs(left - right) / (left + right)
            cand = (score, direction, idx)
            if best is None or cand < best:
                best = cand
        if best is None:
            log.info("no T-joint candidate in box %s; completing it directly", box)
            out.append(box)
            continue
        _, direction, idx = best
        if direction == 0:
            kids = [(i0, idx, j0, j1), (idx, i1, j0, j1)]
        else:
            kids = [(i0, i1, j0, idx), (i0, i1, idx, j1)]
        for kid in reversed(kids):
            stack.append((kid, depth + 1))
    return out


def split_to_tp(surf, max_segmented=0):
    """
    Split an LR surface into tensor-product patches.

    Splitting stops in a piece once it holds at most ``max_segmented``
    partial knot lines.  Each piece is completed to a tensor-product surface
    by knot insertion.
    """
    boxes = split_boxes(surf, max_segmented)
    uv, vv = surf.uvals, surf.vvals
    rects, patches = [], []
    for i0, i1, j0, j1 in boxes:
        rect = ((float(uv[i0]), float(uv[i1])), (float(vv[j0]), float(vv[j1])))
        rects.append(rect)
        patches.append(patch_on_rectangle(surf, *rect))
    return TPPatchSet(patches, rects, _adjacency(boxes))


def _adjacency(boxes):
    adj = []
    for a in range(len(boxes)):
        ai0, ai1, aj0, aj1 = boxes[a]
        for b in range(a + 1, len(boxes)):
            bi0, bi1, bj0, bj1 = boxes[b]
            share_u = (ai1 == bi0 or bi1 == ai0) and min(aj1, bj1) > max(aj0, bj0)
            share_v = (aj1 == bj0 or bj1 == aj0) and min(ai1, bi1) > max(ai0, bi0)
            if share_u or share_v:
                adj.append((a, b))
    return adj
