"""Vertical distances between a surface and a point cloud, aggregated per element."""

import logging
from dataclasses import dataclass

import numpy as np

from .config import DepthThreshold, depth_threshold
from .data import as_cloud

log = logging.getLogger(__name__)

BANDS = (0.2, 0.5)


@dataclass
class ResidualSet:
    """
    Residuals ``z - F(x, y)`` of one cloud against one surface revision.

    ``inside`` marks the points that lie in the surface domain; residuals of
    the others are ``nan``.
    """

    residuals: np.ndarray
    inside: np.ndarray
    surface: object

    @property
    def above(self):
        return self.residuals > 0

    @property
    def below(self):
        return self.residuals < 0

    def is_current(self, surf):
        return surf is self.surface


@dataclass
class AccuracyReport:
    """Summary row plus per-element records (count, max residual, out-of-tolerance count)."""

    n_points: int
    n_coefs: int
    max_dist: float
    avg_dist: float
    bands: tuple
    out_of_tol: int
    elem_count: np.ndarray
    elem_max: np.ndarray
    elem_out: np.ndarray
    n_outside: int = 0

    @property
    def within_fraction(self):
        return 1.0 if self.n_points == 0 else 1.0 - self.out_of_tol / self.n_points

    def row(self, size=None):
        """``(size, #coefs, max, avg, <0.2, 0.2-0.5, >=0.5)``."""
        return (size, self.n_coefs, self.max_dist, self.avg_dist) + tuple(self.bands)

    def summary(self):
        b = self.bands
        return (f"points {self.n_points}  coefs {self.n_coefs}  max {self.max_dist:.4g}  "
                f"avg {self.avg_dist:.4g}  bands {b[0]}/{b[1]}/{b[2]}  out-of-tol {self.out_of_tol}")


def point_tolerances(cloud, threshold):
    """
    Tolerance of every point.

    Per-point tolerances stored in the cloud take precedence over
    ``threshold`` (a number, :class:`DepthThreshold` or per-point array).
    """
    z = cloud.z
    if isinstance(threshold, DepthThreshold) or np.ndim(threshold) == 0:
        zr = (float(z.min()), float(z.max())) if z.size else None
        tol = np.asarray(depth_threshold(z, threshold, zr), dtype=float).reshape(z.shape)
    else:
        tol = np.asarray(threshold, dtype=float).reshape(z.shape).copy()
    own = ~np.isnan(cloud.tol)
    tol[own] = cloud.tol[own]
    return tol


def residuals(surf, cloud):
    cloud = as_cloud(cloud)
    r = np.full(len(cloud), np.nan)
    inside = surf.in_domain(cloud.x, cloud.y)
    if np.any(inside):
        r[inside] = cloud.z[inside] - surf.evaluate(cloud.x[inside], cloud.y[inside])
    return ResidualSet(r, inside, surf)


def compute_accuracy(surf, cloud, threshold):
    """
    Distances from the points to ``surf`` and their per-element summary.

    Returns
    -------
    (AccuracyReport, ResidualSet)
    """
    cloud = as_cloud(cloud)
    res = residuals(surf, cloud)
    inside = res.inside
    n_out = int(np.sum(~inside))
    if n_out:
        log.warning("%d points outside the surface domain were excluded", n_out)
    d = np.abs(res.residuals[inside])
    tol = point_tolerances(cloud, threshold)[inside]
    bad = d > tol
    ne = surf.num_elements
    if d.size:
        elem = surf.locate(cloud.x[inside], cloud.y[inside])
        count = np.bincount(elem, minlength=ne)
        emax = np.zeros(ne)
        np.maximum.at(emax, elem, d)
        eout = np.bincount(elem, weights=bad, minlength=ne).astype(int)
        mx, avg = float(d.max()), float(d.mean())
    else:
        count, emax, eout = np.zeros(ne, int), np.zeros(ne), np.zeros(ne, int)
        mx = avg = 0.0
    b0 = int(np.sum(d < BANDS[0]))
    b1 = int(np.sum((d >= BANDS[0]) & (d < BANDS[1])))
    b2 = int(np.sum(d >= BANDS[1]))
    rep = AccuracyReport(int(d.size), surf.num_coefs, mx, avg, (b0, b1, b2), int(bad.sum()),
                         count, emax, eout, n_out)
    return rep, res


def rmse(cloud, surf):
    """Root mean square vertical error over the points."""
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    r = residuals(surf, cloud)
    if not np.all(r.inside):
        raise ValueError("points outside the surface domain")
    return float(np.sqrt(np.mean(r.residuals ** 2)))
