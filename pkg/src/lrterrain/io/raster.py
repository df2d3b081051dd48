"""Regular elevation grids: sampling a surface, IDW gridding and bilinear lookup."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class Raster:
    """
    Square-cell grid; ``values[0]`` is the northernmost row.

    Cell ``(r, c)`` has its centre at
    ``(xll + (c + 0.5) * cellsize, yll + (nrows - r - 0.5) * cellsize)``.
    """

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float = -9999.0
    values: np.ndarray = None

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError("raster needs at least one row and column")
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        if self.values is None:
            self.values = np.full((self.nrows, self.ncols), self.nodata)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.nrows, self.ncols):
            raise ValueError("values do not match nrows x ncols")

    def centers(self):
        """Cell centre coordinates, each of shape ``(nrows, ncols)``."""
        c = np.arange(self.ncols)
        r = np.arange(self.nrows)
        x = self.xll + (c + 0.5) * self.cellsize
        y = self.yll + (self.nrows - r - 0.5) * self.cellsize
        return np.meshgrid(x, y)

    @property
    def valid(self):
        return self.values != self.nodata

    @property
    def size(self):
        return self.ncols * self.nrows


def _grid_for_extent(x0, x1, y0, y1, cellsize):
    if not cellsize > 0:
        raise ValueError("cellsize must be positive")
    ncols = max(1, math.ceil((x1 - x0) / cellsize - 1e-9))
    nrows = max(1, math.ceil((y1 - y0) / cellsize - 1e-9))
    return ncols, nrows


def raster_from_surface(surf, cellsize, mask=None, nodata=-9999.0):
    """
    Sample ``surf`` at cell centres.

    Parameters
    ----------
    surf : LRSurface
    cellsize : float
    mask : array of bool, optional
        Per-element occupancy.  Cells whose centre falls in an unoccupied
        element get ``nodata``.
    """
    (u0, u1), (v0, v1) = surf.domain
    ncols, nrows = _grid_for_extent(u0, u1, v0, v1, cellsize)
    r = Raster(ncols, nrows, u0, v0, cellsize, nodata)
    X, Y = r.centers()
    inside = (X >= u0) & (X <= u1) & (Y >= v0) & (Y <= v1)
    vals = np.full(X.shape, nodata)
    if np.any(inside):
        vals[inside] = _sample(surf, X, Y, inside)
        if mask is not None:
            occ = np.asarray(mask, dtype=bool)[surf.locate(X[inside], Y[inside])]
            sub = vals[inside]
            sub[~occ] = nodata
            vals[inside] = sub
    r.values = vals
    return r


def idw_weights(d, R):
    """``((R - d)_+ / (R d))**2`` for ``d > 0``."""
    return (np.maximum(0.0, R - d) / (R * d)) ** 2


def idw_raster(points, cellsize, R=20.0, extent=None, nodata=-9999.0, coincide=1e-12):
    """
    Inverse distance weighted grid with radius ``R``.

    The grid is registered to the x/y bounding box of the points unless
    ``extent = (x0, x1, y0, y1)`` is given.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    pts = np.asarray(points, dtype=float)
    if extent is None:
        extent = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
    x0, x1, y0, y1 = extent
    ncols, nrows = _grid_for_extent(x0, x1, y0, y1, cellsize)
    r = Raster(ncols, nrows, x0, y0, cellsize, nodata)
    X, Y = r.centers()
    centers = np.column_stack([X.ravel(), Y.ravel()])
    ptree = cKDTree(pts[:, :2])
    z = pts[:, 2]
    # weighted mean of deviations from a common reference: constant fields come out exact
    zref = float(np.median(z)) if z.size else 0.0
    dz = z - zref
    num = np.zeros(centers.shape[0])
    den = np.zeros(centers.shape[0])
    exact_sum = np.zeros(centers.shape[0])
    exact_cnt = np.zeros(centers.shape[0])
    chunk = max(1, int(4e6 // max(1.0, pts.shape[0] * math.pi * R * R / max((x1 - x0) * (y1 - y0), 1e-12))))
    for s in range(0, centers.shape[0], chunk):
        ctree = cKDTree(centers[s:s + chunk])
        dm = ctree.sparse_distance_matrix(ptree, R, output_type="ndarray")
        if dm.size == 0:
            continue
        ci, pi, d = dm["i"] + s, dm["j"], dm["v"]
        hit = d < coincide
        np.add.at(exact_sum, ci[hit], z[pi[hit]])
        np.add.at(exact_cnt, ci[hit], 1)
        ok = ~hit & (d < R)
        w = idw_weights(d[ok], R)
        np.add.at(num, ci[ok], w * dz[pi[ok]])
        np.add.at(den, ci[ok], w)
    # coincident points may also be missing from the sparse output when d == 0
    dist0, idx0 = ptree.query(centers, k=1)
    miss = (exact_cnt == 0) & (dist0 < coincide)
    exact_sum[miss] = z[idx0[miss]]
    exact_cnt[miss] = 1
    vals = np.full(centers.shape[0], nodata)
    good = den > 0
    vals[good] = zref + num[good] / den[good]
    ex = exact_cnt > 0
    vals[ex] = exact_sum[ex] / exact_cnt[ex]
    r.values = vals.reshape(nrows, ncols)
    return r


def raster_bilinear_eval(r, x, y):
    """
    Bilinear interpolation between the four surrounding cell centres.

    Within half a cell of the raster edge the nearest edge centres are used
    (constant extension across the edge).  Returns ``r.nodata`` where any
    contributing cell is nodata or the point lies outside the raster.
    """
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cs = r.cellsize
    # column / row coordinates with row counted from the south
    fc = (x - r.xll) / cs - 0.5
    fr = (y - r.yll) / cs - 0.5
    outside = (x < r.xll) | (x > r.xll + r.ncols * cs) | (y < r.yll) | (y > r.yll + r.nrows * cs)
    fc = np.clip(fc, 0.0, r.ncols - 1)
    fr = np.clip(fr, 0.0, r.nrows - 1)
    c0 = np.minimum(np.floor(fc).astype(int), max(r.ncols - 2, 0))
    s0 = np.minimum(np.floor(fr).astype(int), max(r.nrows - 2, 0))
    c1 = np.minimum(c0 + 1, r.ncols - 1)
    s1 = np.minimum(s0 + 1, r.nrows - 1)
    tx = fc - c0
    ty = fr - s0
    north = r.values[::-1]  # row index counted from the south
    v00, v10 = north[s0, c0], north[s0, c1]
    v01, v11 = north[s1, c0], north[s1, c1]
    out = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11
    bad = outside | (v00 == r.nodata) | (v10 == r.nodata) | (v01 == r.nodata) | (v11 == r.nodata)
    out[bad] = r.nodata
    return float(out[0]) if scalar else out


def _sample(surf, X, Y, inside, du=0, dv=0):
    """Surface values at the ``inside`` cell centres, through a grid evaluation when possible."""
    if np.all(inside):
        G = surf.evaluate_grid(X[0], Y[:, 0], du, dv)  # (ncols, nrows)
        return G.T.ravel()
    return surf.evaluate(X[inside], Y[inside], du, dv)
