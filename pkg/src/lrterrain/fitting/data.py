"""Scattered point clouds with per-point weights, flags and tolerances."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DataPoint:
    """
    One scattered observation.

    ``z`` is elevation, negative below sea level.  ``tol`` is an optional
    per-point tolerance overriding the global threshold.
    """

    x: float
    y: float
    z: float
    weight: float = 1.0
    significant: bool = False
    tol: float = None

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError("weight must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive when given")


class PointCloud:
    """
    Column-oriented point cloud.

    Parameters
    ----------
    xyz : array_like, shape (n, 3)
    weight : array_like, optional
        Positive per-point weights, default 1.
    significant : array_like of bool, optional
    tol : array_like, optional
        Per-point tolerances; ``nan`` means "use the global threshold".
    """

    def __init__(self, xyz, weight=None, significant=None, tol=None):
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        n = xyz.shape[0]
        self.xyz = xyz
        self.weight = np.ones(n) if weight is None else np.asarray(weight, dtype=float).reshape(n)
        self.significant = (np.zeros(n, dtype=bool) if significant is None
                            else np.asarray(significant, dtype=bool).reshape(n))
        self.tol = np.full(n, np.nan) if tol is None else np.asarray(tol, dtype=float).reshape(n)
        if np.any(~(self.weight > 0)):
            raise ValueError("weights must be positive")
        if np.any(self.tol[~np.isnan(self.tol)] <= 0):
            raise ValueError("per-point tolerances must be positive")
        if not np.all(np.isfinite(xyz)):
            raise ValueError("point coordinates must be finite")

    @classmethod
    def from_points(cls, points):
        pts = list(points)
        xyz = [(p.x, p.y, p.z) for p in pts]
        tol = [np.nan if p.tol is None else p.tol for p in pts]
        return cls(xyz, [p.weight for p in pts], [p.significant for p in pts], tol)

    def __len__(self):
        return self.xyz.shape[0]

    def __getitem__(self, k):
        x, y, z = self.xyz[k]
        t = self.tol[k]
        return DataPoint(float(x), float(y), float(z), float(self.weight[k]), bool(self.significant[k]),
                         None if np.isnan(t) else float(t))

    @property
    def x(self):
        return self.xyz[:, 0]

    @property
    def y(self):
        return self.xyz[:, 1]

    @property
    def z(self):
        return self.xyz[:, 2]

    def subset(self, mask):
        return PointCloud(self.xyz[mask], self.weight[mask], self.significant[mask], self.tol[mask])

    def with_z(self, z):
        xyz = self.xyz.copy()
        xyz[:, 2] = z
        return PointCloud(xyz, self.weight, self.significant, self.tol)

    def bbox(self):
        if len(self) == 0:
            raise ValueError("empty point cloud")
        return (float(self.x.min()), float(self.x.max())), (float(self.y.min()), float(self.y.max()))


def as_cloud(data):
    """Accept a :class:`PointCloud`, a list of :class:`DataPoint` or an ``(n, 3)`` array."""
    if isinstance(data, PointCloud):
        return data
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], DataPoint):
        return PointCloud.from_points(data)
    return PointCloud(data)
