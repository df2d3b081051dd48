"""The iterative refine-and-approximate loop."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..bspline import TPSurface, uniform_knots
from ..lrsurface import LRSurface
from .accuracy import compute_accuracy
from .config import FitConfig
from .data import as_cloud
from .refine import select_refinements
from .solve import least_squares_fit, mba_update, point_weights

log = logging.getLogger(__name__)


@dataclass
class IterationRecord:
    iteration: int
    method: str
    n_coefs: int
    n_elements: int
    max_dist: float
    avg_dist: float
    out_of_tol: int
    within_fraction: float
    seconds: float

    HEADER = ("iteration", "method", "n_coefs", "n_elements", "max_dist", "avg_dist",
              "out_of_tol", "within_fraction", "seconds")


@dataclass
class FitResult:
    surface: LRSurface
    report: object
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.surface, self.report, self.history))


def _domain(cloud):
    (x0, x1), (y0, y1) = cloud.bbox()
    # a degenerate extent gets a unit-width interval around the data
    if x1 - x0 <= 0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 <= 0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    return (x0, x1), (y0, y1)


def initial_fit(cloud, config=None, domain=None):
    """
    Least-squares tensor-product surface on the bounding box of the cloud.

    Parameters
    ----------
    cloud : PointCloud
    config : FitConfig, optional
    domain : ((x0, x1), (y0, y1)), optional
        Overrides the bounding box; it must contain every point.
    """
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    config = config or FitConfig()
    (x0, x1), (y0, y1) = domain if domain is not None else _domain(cloud)
    p, q = config.degrees
    n1, n2 = config.initial_grid
    tp = TPSurface(uniform_knots(x0, x1, n1, p), uniform_knots(y0, y1, n2, q), p, q, np.zeros((n1, n2)))
    surf = LRSurface.from_tensor_product(tp)
    return least_squares_fit(surf, cloud, config)


def _with_significant_tol(cloud, config):
    if config.significant_tol is None or not np.any(cloud.significant):
        return cloud
    tol = cloud.tol.copy()
    fill = cloud.significant & np.isnan(tol)
    tol[fill] = config.significant_tol
    return type(cloud)(cloud.xyz, cloud.weight, cloud.significant, tol)


def adaptive_fit(cloud, config=None, callback=None, domain=None):
    """
    Fit an LR surface to ``cloud`` by local refinement.

    Each iteration refines the elements holding out-of-tolerance points and
    recomputes the coefficients: by least squares for the first
    ``config.ls_iterations`` iterations and by ``config.mba_passes`` MBA
    passes afterwards.  Significant points still outside their tolerance at
    the end get one more MBA pass at ``significant_final_weight``.

    Parameters
    ----------
    callback : callable, optional
        Called with each :class:`IterationRecord`.

    Returns
    -------
    FitResult
        Unpacks as ``(surface, report, history)``.
    """
    config = config or FitConfig()
    cloud = _with_significant_tol(as_cloud(cloud), config)
    history = []

    def record(it, method, surf, rep, t0):
        rec = IterationRecord(it, method, surf.num_coefs, surf.num_elements, rep.max_dist, rep.avg_dist,
                              rep.out_of_tol, rep.within_fraction, time.perf_counter() - t0)
        history.append(rec)
        log.info("iteration %d (%s): %s", it, method, rep.summary())
        if callback is not None:
            callback(rec)

    t0 = time.perf_counter()
    surf = initial_fit(cloud, config, domain)
    rep, _ = compute_accuracy(surf, cloud, config.threshold)
    record(0, "ls", surf, rep, t0)
    weights = point_weights(cloud, config.significant_weight)
    for it in range(1, config.max_iterations + 1):
        if rep.out_of_tol == 0:
            break
        lines = select_refinements(surf, rep, config)
        if not lines:
            log.info("no refinable element left")
            break
        t0 = time.perf_counter()
        surf = surf.insert_meshlines(lines)
        if it <= config.ls_iterations:
            method = "ls"
            surf = least_squares_fit(surf, cloud, config, weights=weights)
        else:
            method = "mba"
            surf = mba_update(surf, cloud, weights, passes=config.mba_passes)
        rep, _ = compute_accuracy(surf, cloud, config.threshold)
        record(it, method, surf, rep, t0)
    if np.any(cloud.significant):
        r = cloud.z - surf.evaluate(cloud.x, cloud.y)
        tol = np.where(np.isnan(cloud.tol), np.inf, cloud.tol)
        if np.any(cloud.significant & (np.abs(r) > tol)):
            t0 = time.perf_counter()
            w = point_weights(cloud, config.significant_final_weight)
            surf = mba_update(surf, cloud, w)
            rep, _ = compute_accuracy(surf, cloud, config.threshold)
            record(len(history), "mba-significant", surf, rep, t0)
    return FitResult(surf, rep, history)
