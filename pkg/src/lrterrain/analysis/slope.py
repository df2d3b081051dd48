"""Slope rasters."""

import numpy as np

from ..io.raster import Raster, _grid_for_extent, _sample


def slope(surf, resolution, mask=None, nodata=-9999.0):
    """
    Slope angle ``atan(|grad F|)`` in degrees at cell centres.

    Cells centred in unoccupied elements (per ``mask``) get ``nodata``.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    (u0, u1), (v0, v1) = surf.domain
    ncols, nrows = _grid_for_extent(u0, u1, v0, v1, resolution)
    r = Raster(ncols, nrows, u0, v0, resolution, nodata)
    X, Y = r.centers()
    inside = (X >= u0) & (X <= u1) & (Y >= v0) & (Y <= v1)
    vals = np.full(X.shape, nodata)
    if np.any(inside):
        gx = _sample(surf, X, Y, inside, 1, 0)
        gy = _sample(surf, X, Y, inside, 0, 1)
        s = np.degrees(np.arctan(np.hypot(gx, gy)))
        if mask is not None:
            occ = np.asarray(mask, dtype=bool)[surf.locate(X[inside], Y[inside])]
            s[~occ] = nodata
        vals[inside] = s
    r.values = vals
    return r
