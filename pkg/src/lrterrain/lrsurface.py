"""
Locally refined (LR) B-spline surfaces.

The mesh is stored on the tensor grid spanned by all distinct knot values
(``uvals`` x ``vvals``).  ``mu[i, j]`` is the multiplicity of the constant-u
line at ``uvals[i]`` over the v-interval ``[vvals[j], vvals[j+1]]`` and
``mv[j, i]`` the same for constant-v lines.  Meshline insertion adds
multiplicity on these grids and then splits every B-spline that lost minimal
support, merging duplicates as it goes.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .bspline import (
    ScaledTensorBSpline,
    TPSurface,
    basis_local,
    insert_knot,
    tp_grid,
    tp_restrict,
)


@dataclass(frozen=True)
class Meshline:
    """
    Axis-parallel knot line segment.

    ``direction`` names the parameter that is constant along the line:
    ``"u"`` gives the line ``u = fixed`` for ``start <= v <= end``.
    """

    direction: str
    fixed: float
    start: float
    end: float
    multiplicity: int = 1

    def __post_init__(self):
        if self.direction not in ("u", "v"):
            raise ValueError("direction must be 'u' or 'v'")
        if not self.end > self.start:
            raise ValueError("meshline span must have positive length")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be positive")
        for name in ("fixed", "start", "end"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass
class Element:
    """Box of the LR mesh with the B-splines whose support contains it."""

    box: tuple
    overlapping: tuple
    occupied: bool = False
    stats: object = None

    @property
    def area(self):
        (u0, u1), (v0, v1) = self.box
        return (u1 - u0) * (v1 - v0)


class LRSurface:
    """
    LR B-spline surface ``F(u, v) = sum_B c_B s_B B(u, v)``.

    Instances are treated as immutable: refinement and coefficient updates
    return new surfaces.
    """

    def __init__(self, degrees, uvals, vvals, mu, mv, bsplines, dim=1, meshlines=()):
        self.degree_u, self.degree_v = int(degrees[0]), int(degrees[1])
        self.dim = int(dim)
        self.uvals = np.asarray(uvals, dtype=float)
        self.vvals = np.asarray(vvals, dtype=float)
        self._mu = np.asarray(mu, dtype=np.int64)
        self._mv = np.asarray(mv, dtype=np.int64)
        self._bs = bsplines
        self.meshlines = tuple(meshlines)
        self._finalize()

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_tensor_product(cls, s):
        """LR representation of a tensor-product surface (all scales one)."""
        (u0, u1), (v0, v1) = s.domain
        s = tp_restrict(s, (u0, u1), (v0, v1))
        p, q = s.degree_u, s.degree_v
        U, V = s.uknots, s.vknots
        uvals, umult = np.unique(U, return_counts=True)
        vvals, vmult = np.unique(V, return_counts=True)
        mu = np.repeat(umult[:, None], vvals.size - 1, axis=1)
        mv = np.repeat(vmult[:, None], uvals.size - 1, axis=1)
        c = s.coefs.reshape(s.shape + (s.dim,))
        bs = {}
        for i in range(s.shape[0]):
            uk = tuple(float(x) for x in U[i:i + p + 2])
            for j in range(s.shape[1]):
                vk = tuple(float(x) for x in V[j:j + q + 2])
                bs[(uk, vk)] = (1.0, c[i, j].copy())
        return cls((p, q), uvals, vvals, mu, mv, bs, dim=s.dim)

    @classmethod
    def from_bsplines(cls, degrees, uvals, vvals, keys, scales, coefs):
        """
        Rebuild a surface from its scaled B-splines.

        The mesh is taken as the union of the B-spline knot lines over their
        supports, with the largest multiplicity found.
        """
        uvals = np.asarray(uvals, dtype=float)
        vvals = np.asarray(vvals, dtype=float)
        coefs = np.asarray(coefs, dtype=float)
        dim = 1 if coefs.ndim == 1 else coefs.shape[1]
        coefs = coefs.reshape(len(keys), dim)
        mu = np.zeros((uvals.size, vvals.size - 1), dtype=np.int64)
        mv = np.zeros((vvals.size, uvals.size - 1), dtype=np.int64)
        bs = {}
        for k, key in enumerate(keys):
            uk, vk = key
            if key in bs:
                raise ValueError("duplicate B-spline")
            iu = np.searchsorted(uvals, uk)
            jv = np.searchsorted(vvals, vk)
            if np.any(uvals[iu] != np.asarray(uk)) or np.any(vvals[jv] != np.asarray(vk)):
                raise ValueError("B-spline knot not present in the global knot vectors")
            for i, m in zip(*np.unique(iu, return_counts=True)):
                mu[i, jv[0]:jv[-1]] = np.maximum(mu[i, jv[0]:jv[-1]], m)
            for j, m in zip(*np.unique(jv, return_counts=True)):
                mv[j, iu[0]:iu[-1]] = np.maximum(mv[j, iu[0]:iu[-1]], m)
            bs[key] = (float(scales[k]), coefs[k].copy())
        return cls(degrees, uvals, vvals, mu, mv, bs, dim=dim)

    def _finalize(self):
        keys = sorted(self._bs)
        self._keys = keys
        nb = len(keys)
        p, q = self.degree_u, self.degree_v
        self._U = np.array([k[0] for k in keys], dtype=float).reshape(nb, p + 2)
        self._V = np.array([k[1] for k in keys], dtype=float).reshape(nb, q + 2)
        self._S = np.array([self._bs[k][0] for k in keys], dtype=float)
        self._C = np.array([self._bs[k][1] for k in keys], dtype=float).reshape(nb, self.dim)
        self._elem_cache = None
        self._tp_cache = None

    def _copy_state(self):
        return dict(self._bs), self.uvals.copy(), self.vvals.copy(), self._mu.copy(), self._mv.copy()

    # ------------------------------------------------------------------
    # basic properties

    @property
    def degrees(self):
        return self.degree_u, self.degree_v

    @property
    def domain(self):
        return (float(self.uvals[0]), float(self.uvals[-1])), (float(self.vvals[0]), float(self.vvals[-1]))

    @property
    def num_coefs(self):
        return len(self._keys)

    def __len__(self):
        return len(self._keys)

    @property
    def uknot_matrix(self):
        """Local u-knots of every B-spline, shape ``(n, p1 + 2)``."""
        return self._U

    @property
    def vknot_matrix(self):
        return self._V

    @property
    def scales(self):
        return self._S

    @property
    def coefs(self):
        """Coefficients, shape ``(n,)`` for scalar surfaces else ``(n, dim)``."""
        return self._C[:, 0] if self.dim == 1 else self._C

    @property
    def bsplines(self):
        p, q = self.degree_u, self.degree_v
        out = []
        for k, (uk, vk) in enumerate(self._keys):
            c = self._C[k, 0] if self.dim == 1 else self._C[k].copy()
            out.append(ScaledTensorBSpline(uk, vk, p, q, float(self._S[k]), c))
        return out

    def multiplicity_grids(self):
        """Copies of the constant-u and constant-v line multiplicity grids."""
        return self._mu.copy(), self._mv.copy()

    def with_coefficients(self, coefs):
        """Same spline space, new coefficients (ordered like :attr:`coefs`)."""
        c = np.asarray(coefs, dtype=float)
        dim = 1 if c.ndim == 1 else c.shape[1]
        c = c.reshape(len(self._keys), dim)
        bs = {k: (self._bs[k][0], c[i].copy()) for i, k in enumerate(self._keys)}
        return LRSurface(self.degrees, self.uvals, self.vvals, self._mu, self._mv, bs, dim=dim,
                         meshlines=self.meshlines)

    def same_space(self, other):
        return (self.degrees == other.degrees and self._keys == other._keys
                and np.array_equal(self._S, other._S))

    def greville_points(self):
        """Greville points of all B-splines, shape ``(n, 2)``."""
        p, q = self.degree_u, self.degree_v
        gu = self._U[:, 1:p + 1].mean(axis=1) if p > 0 else 0.5 * (self._U[:, 0] + self._U[:, 1])
        gv = self._V[:, 1:q + 1].mean(axis=1) if q > 0 else 0.5 * (self._V[:, 0] + self._V[:, 1])
        return np.column_stack([gu, gv])

    # ------------------------------------------------------------------
    # refinement

    def insert_meshline(self, m):
        """Return the surface refined by one meshline."""
        return self.insert_meshlines([m])

    def insert_meshlines(self, lines):
        """
        Return the surface refined by a batch of meshlines.

        All lines are added to the mesh first; then every B-spline without
        minimal support is split until the collection is consistent again.
        Raises ``ValueError`` if no B-spline support is split.
        """
        lines = list(lines)
        if not lines:
            return self
        bs, uvals, vvals, mu, mv = self._copy_state()
        state = _MeshState(self.degree_u, self.degree_v, uvals, vvals, mu, mv)
        for m in lines:
            state.add(m)
        queue = deque(k for k in sorted(bs) if any(_crosses(k, m) for m in lines))
        nsplit = _repair(bs, state, queue)
        if nsplit == 0:
            raise ValueError("meshline does not split the support of any B-spline")
        return LRSurface(self.degrees, state.uvals, state.vvals, state.mu, state.mv, bs,
                         dim=self.dim, meshlines=self.meshlines + tuple(lines))

    def check_minimal_support(self):
        """Return keys of B-splines that do not have minimal support (should be empty)."""
        state = _MeshState(self.degree_u, self.degree_v, self.uvals, self.vvals, self._mu, self._mv)
        return [k for k in self._keys if state.find_split(k) is not None]

    # ------------------------------------------------------------------
    # elements and point location

    def _elements(self):
        if self._elem_cache is None:
            self._elem_cache = _build_elements(self)
        return self._elem_cache

    def elements(self):
        """Elements of the mesh with the indices of their overlapping B-splines."""
        ec = self._elements()
        out = []
        for e in range(ec.boxes.shape[0]):
            i0, i1, j0, j1 = ec.boxes[e]
            box = ((float(self.uvals[i0]), float(self.uvals[i1])), (float(self.vvals[j0]), float(self.vvals[j1])))
            ov = tuple(int(b) for b in ec.bsp_index[ec.bsp_ptr[e]:ec.bsp_ptr[e + 1]])
            out.append(Element(box, ov))
        return out

    @property
    def num_elements(self):
        return self._elements().boxes.shape[0]

    def element_boxes(self):
        """Element rectangles as an array of rows ``(u0, u1, v0, v1)``."""
        b = self._elements().boxes
        return np.column_stack([self.uvals[b[:, 0]], self.uvals[b[:, 1]], self.vvals[b[:, 2]], self.vvals[b[:, 3]]])

    def element_bspline_lists(self):
        """CSR-style ``(indptr, indices)`` listing the B-splines overlapping each element."""
        ec = self._elements()
        return ec.bsp_ptr, ec.bsp_index

    def in_domain(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        return (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1)

    def locate(self, u, v):
        """Element index of each point (half-open cells, closed at the far end)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(~self.in_domain(u, v)):
            raise ValueError("point outside the surface domain")
        ec = self._elements()
        i = np.clip(np.searchsorted(self.uvals, u, side="right") - 1, 0, self.uvals.size - 2)
        j = np.clip(np.searchsorted(self.vvals, v, side="right") - 1, 0, self.vvals.size - 2)
        return ec.cell_elem[i, j]

    def occupancy(self, u, v):
        """Boolean per element: does it contain at least one of the given points."""
        occ = np.zeros(self.num_elements, dtype=bool)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        keep = self.in_domain(u, v)
        if np.any(keep):
            occ[self.locate(u[keep], v[keep])] = True
        return occ

    def _pairs(self, u, v):
        elem = self.locate(u, v)
        ptr, idx = self.element_bspline_lists()
        counts = ptr[elem + 1] - ptr[elem]
        k = np.repeat(np.arange(elem.size), counts)
        start = np.repeat(ptr[elem], counts)
        offs = np.arange(k.size) - np.repeat(np.cumsum(counts) - counts, counts)
        return k, idx[start + offs]

    def basis_matrix(self, u, v, du=0, dv=0):
        """Sparse matrix ``A[k, b] = d^(du,dv) N_b(u_k, v_k)``."""
        u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
        k, b = self._pairs(u, v)
        (_, umax), (_, vmax) = self.domain
        bu = basis_local(self._U[b], self.degree_u, u[k], du, right=umax)
        bv = basis_local(self._V[b], self.degree_v, v[k], dv, right=vmax)
        vals = self._S[b] * bu * bv
        return sp.csr_matrix((vals, (k, b)), shape=(u.size, len(self._keys)))

    def evaluate(self, u, v, du=0, dv=0):
        """Evaluate the surface or one of its partial derivatives."""
        scalar = np.ndim(u) == 0 and np.ndim(v) == 0
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        shape = u.shape
        A = self.basis_matrix(u.ravel(), v.ravel(), du, dv)
        F = A @ self._C
        if self.dim == 1:
            F = F[:, 0]
            return float(F[0]) if scalar else F.reshape(shape)
        return F[0] if scalar else F.reshape(shape + (self.dim,))

    __call__ = evaluate

    def tensor_product(self):
        """Equivalent tensor-product surface (cached)."""
        if self._tp_cache is None:
            self._tp_cache = to_tensor_product(self)
        return self._tp_cache

    def evaluate_grid(self, u, v, du=0, dv=0):
        """Scalar surface on the grid ``u x v``, shape ``(len(u), len(v))``."""
        return tp_grid(self.tensor_product(), u, v, du, dv)

    def partition_of_unity(self, u, v):
        """``sum_B N_B`` at the given points."""
        A = self.basis_matrix(u, v)
        return np.asarray(A.sum(axis=1)).ravel()

    def coefficient_range(self):
        return float(self._C.min()), float(self._C.max())


# ----------------------------------------------------------------------
# mesh bookkeeping


class _MeshState:
    def __init__(self, p, q, uvals, vvals, mu, mv):
        self.p, self.q = p, q
        self.uvals = np.array(uvals, dtype=float)
        self.vvals = np.array(vvals, dtype=float)
        self.mu = np.array(mu, dtype=np.int64)
        self.mv = np.array(mv, dtype=np.int64)

    def _ensure_u(self, x):
        i = int(np.searchsorted(self.uvals, x))
        if i < self.uvals.size and self.uvals[i] == x:
            return i
        if i == 0 or i == self.uvals.size:
            raise ValueError(f"u value {x} outside the domain")
        self.uvals = np.insert(self.uvals, i, x)
        self.mu = np.insert(self.mu, i, 0, axis=0)
        # the u-segment [i-1, i] of every constant-v line splits in two
        self.mv = np.insert(self.mv, i - 1, self.mv[:, i - 1], axis=1)
        return i

    def _ensure_v(self, x):
        j = int(np.searchsorted(self.vvals, x))
        if j < self.vvals.size and self.vvals[j] == x:
            return j
        if j == 0 or j == self.vvals.size:
            raise ValueError(f"v value {x} outside the domain")
        self.vvals = np.insert(self.vvals, j, x)
        self.mv = np.insert(self.mv, j, 0, axis=0)
        self.mu = np.insert(self.mu, j - 1, self.mu[:, j - 1], axis=1)
        return j

    def add(self, m):
        if m.direction == "u":
            if not self.uvals[0] < m.fixed < self.uvals[-1]:
                raise ValueError("meshline must lie in the interior of the domain")
            if m.start < self.vvals[0] or m.end > self.vvals[-1]:
                raise ValueError("meshline span leaves the domain")
            i = self._ensure_u(m.fixed)
            j0, j1 = self._ensure_v(m.start), self._ensure_v(m.end)
            self.mu[i, j0:j1] += m.multiplicity
            if self.mu[i, j0:j1].max() > self.p + 1:
                raise ValueError(f"multiplicity exceeds degree + 1 = {self.p + 1}")
        else:
            if not self.vvals[0] < m.fixed < self.vvals[-1]:
                raise ValueError("meshline must lie in the interior of the domain")
            if m.start < self.uvals[0] or m.end > self.uvals[-1]:
                raise ValueError("meshline span leaves the domain")
            j = self._ensure_v(m.fixed)
            i0, i1 = self._ensure_u(m.start), self._ensure_u(m.end)
            self.mv[j, i0:i1] += m.multiplicity
            if self.mv[j, i0:i1].max() > self.q + 1:
                raise ValueError(f"multiplicity exceeds degree + 1 = {self.q + 1}")

    def find_split(self, key):
        """First meshline value splitting the support of ``key``, or ``None``."""
        uk, vk = key
        iu = np.searchsorted(self.uvals, uk)
        jv = np.searchsorted(self.vvals, vk)
        a, b = iu[0], iu[-1]
        c, d = jv[0], jv[-1]
        if b - a > 1:
            need = self.mu[a + 1:b, c:d].min(axis=1)
            have = np.bincount(iu - a, minlength=b - a + 1)[1:-1]
            bad = np.nonzero(need > have)[0]
            if bad.size:
                return 0, float(self.uvals[a + 1 + bad[0]])
        if d - c > 1:
            need = self.mv[c + 1:d, a:b].min(axis=1)
            have = np.bincount(jv - c, minlength=d - c + 1)[1:-1]
            bad = np.nonzero(need > have)[0]
            if bad.size:
                return 1, float(self.vvals[c + 1 + bad[0]])
        return None


def _crosses(key, m):
    uk, vk = key
    if m.direction == "u":
        return uk[0] < m.fixed < uk[-1] and m.start < vk[-1] and m.end > vk[0]
    return vk[0] < m.fixed < vk[-1] and m.start < uk[-1] and m.end > uk[0]


def _repair(bs, state, queue):
    """Split B-splines until all have minimal support; FIFO order.  Returns split count."""
    p, q = state.p, state.q
    nsplit = 0
    while queue:
        key = queue.popleft()
        if key not in bs:
            continue
        hit = state.find_split(key)
        if hit is None:
            continue
        direction, a = hit
        scale, coef = bs.pop(key)
        uk, vk = key
        if direction == 0:
            k1, k2, a1, a2 = insert_knot(uk, p, a)
            children = (((tuple(k1.tolist()), vk), a1), ((tuple(k2.tolist()), vk), a2))
        else:
            k1, k2, a1, a2 = insert_knot(vk, q, a)
            children = (((uk, tuple(k1.tolist())), a1), ((uk, tuple(k2.tolist())), a2))
        for child, alpha in children:
            w = scale * alpha
            if child in bs:
                sd, cd = bs[child]
                s_new = sd + w
                bs[child] = (s_new, (sd * cd + w * coef) / s_new)
            else:
                bs[child] = (w, coef)
            queue.append(child)
        nsplit += 1
    return nsplit


@dataclass
class _ElementCache:
    boxes: np.ndarray  # (E, 4) index ranges i0, i1, j0, j1
    cell_elem: np.ndarray
    bsp_ptr: np.ndarray
    bsp_index: np.ndarray


def _build_elements(surf):
    uvals, vvals = surf.uvals, surf.vvals
    mu, mv = surf._mu, surf._mv
    nu, nv = uvals.size - 1, vvals.size - 1
    ids = np.arange(nu * nv).reshape(nu, nv)
    rows, cols = [], []
    if nu > 1:
        open_u = mu[1:nu, :] == 0
        rows.append(ids[:-1, :][open_u])
        cols.append(ids[1:, :][open_u])
    if nv > 1:
        open_v = (mv[1:nv, :] == 0).T
        rows.append(ids[:, :-1][open_v])
        cols.append(ids[:, 1:][open_v])
    r = np.concatenate(rows) if rows else np.zeros(0, int)
    c = np.concatenate(cols) if cols else np.zeros(0, int)
    g = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(nu * nv, nu * nv))
    ncomp, lab = connected_components(g, directed=False)
    ii, jj = np.divmod(np.arange(nu * nv), nv)
    i0 = np.full(ncomp, nu)
    j0 = np.full(ncomp, nv)
    i1 = np.zeros(ncomp, int)
    j1 = np.zeros(ncomp, int)
    np.minimum.at(i0, lab, ii)
    np.minimum.at(j0, lab, jj)
    np.maximum.at(i1, lab, ii + 1)
    np.maximum.at(j1, lab, jj + 1)
    size = np.bincount(lab, minlength=ncomp)
    if np.any(size != (i1 - i0) * (j1 - j0)):
        raise RuntimeError("mesh has a non-rectangular element (dangling meshline)")
    order = np.lexsort((i0, j0))
    remap = np.empty(ncomp, int)
    remap[order] = np.arange(ncomp)
    boxes = np.column_stack([i0, i1, j0, j1])[order]
    cell_elem = remap[lab].reshape(nu, nv)
    # B-spline supports in cell indices
    bu0 = np.searchsorted(uvals, surf._U[:, 0])
    bu1 = np.searchsorted(uvals, surf._U[:, -1])
    bv0 = np.searchsorted(vvals, surf._V[:, 0])
    bv1 = np.searchsorted(vvals, surf._V[:, -1])
    ei, ej = boxes[:, 0], boxes[:, 2]
    pe, pb = [], []
    nb = bu0.size
    chunk = max(1, 2_000_000 // max(1, boxes.shape[0]))
    for s0 in range(0, nb, chunk):
        sl = slice(s0, min(nb, s0 + chunk))
        m = ((ei[None, :] >= bu0[sl, None]) & (ei[None, :] < bu1[sl, None])
             & (ej[None, :] >= bv0[sl, None]) & (ej[None, :] < bv1[sl, None]))
        b_, e_ = np.nonzero(m)
        pb.append(b_ + s0)
        pe.append(e_)
    pe = np.concatenate(pe) if pe else np.zeros(0, int)
    pb = np.concatenate(pb) if pb else np.zeros(0, int)
    order = np.lexsort((pb, pe))
    pe, pb = pe[order], pb[order]
    ptr = np.zeros(boxes.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(pe, minlength=boxes.shape[0]), out=ptr[1:])
    return _ElementCache(boxes, cell_elem, ptr, pb)


def from_tensor_product(s):
    return LRSurface.from_tensor_product(s)


def insert_meshline(surf, m):
    return surf.insert_meshline(m)


def evaluate(surf, u, v, du=0, dv=0):
    return surf.evaluate(u, v, du, dv)


def elements(surf):
    return surf.elements()


def to_tensor_product(surf):
    """Full tensor-product representation (every meshline extended)."""
    from .io.split import patch_on_rectangle

    (u0, u1), (v0, v1) = surf.domain
    return patch_on_rectangle(surf, (u0, u1), (v0, v1))
