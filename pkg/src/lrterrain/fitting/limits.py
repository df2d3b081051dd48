"""Surfaces bounding a point cloud, and a depth weighted blend toward the upper one."""

import numpy as np
import scipy.sparse as sp

from .data import as_cloud
from .solve import mba_coefficients


def _residual_surface(A, r, fit, passes):
    """MBA passes on the points in ``fit`` starting from zero, then lift to cover every residual."""
    nb = A.shape[1]
    c = np.zeros(nb)
    Af = A[fit]
    rf = r[fit]
    for _ in range(passes):
        if rf.size == 0:
            break
        c = c + mba_coefficients(Af, rf - Af @ c)
    return c


def _lift(A, delta, c, upper):
    """Shift each coefficient by the worst excess among the points in its support."""
    coo = sp.coo_matrix(A)
    on = coo.data > 0
    k, b = coo.row[on], coo.col[on]
    d = delta[k]
    if upper:
        shift = np.zeros(A.shape[1])
        np.maximum.at(shift, b, d)
    else:
        shift = np.zeros(A.shape[1])
        np.minimum.at(shift, b, d)
    return c + shift


def limit_surfaces(surf, cloud, passes=5):
    """
    Lower and upper surfaces in the space of ``surf`` enclosing the cloud.

    The residuals above (below) the surface are approximated by ``passes``
    MBA steps.  Every B-spline coefficient is then raised (lowered) by the
    largest excess of a residual over the residual surface among the points
    in its support; by partition of unity this makes the residual surface
    reach every residual.

    Returns
    -------
    (lower, upper) : LRSurface
    """
    cloud = as_cloud(cloud)
    A = surf.basis_matrix(cloud.x, cloud.y).tocsr()
    c0 = np.asarray(surf.coefs, dtype=float)
    r = cloud.z - A @ c0
    out = []
    for upper in (False, True):
        mask = r > 0 if upper else r < 0
        c = _residual_surface(A, r, mask, passes)
        c = _lift(A, r - A @ c, c, upper)
        out.append(surf.with_coefficients(c0 + c))
    return out[0], out[1]


def blend_factor(d, d1, d2):
    """1 at or below ``d1``, 0 at or above ``d2``, linear in between."""
    d = np.asarray(d, dtype=float)
    return np.clip((d2 - d) / (d2 - d1), 0.0, 1.0)


def weighted_mid_surface(source, upper, d1=-20.0, d2=0.0):
    """
    Blend coefficients of ``source`` and ``upper`` by depth.

    The depth of a B-spline is the mean of both surfaces at its Greville
    point.  Deep parts follow ``source`` and shallow parts ``upper``.
    """
    if not d1 < d2:
        raise ValueError("d1 must be smaller than d2")
    if not source.same_space(upper):
        raise ValueError("source and upper surfaces do not share the same B-splines")
    g = source.greville_points()
    d = 0.5 * (source.evaluate(g[:, 0], g[:, 1]) + upper.evaluate(g[:, 0], g[:, 1]))
    a = blend_factor(d, d1, d2)
    cs = np.asarray(source.coefs, dtype=float)
    cu = np.asarray(upper.coefs, dtype=float)
    c = np.where(a == 1.0, cs, np.where(a == 0.0, cu, a * cs + (1 - a) * cu))
    return source.with_coefficients(c)
