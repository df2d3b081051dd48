"""Adaptive approximation of scattered points by LR spline surfaces."""

from .accuracy import AccuracyReport, ResidualSet, compute_accuracy, point_tolerances, residuals, rmse
from .adaptive import FitResult, IterationRecord, adaptive_fit, initial_fit
from .config import PRESETS, DepthThreshold, FitConfig, depth_threshold, read_config, write_config
from .data import DataPoint, PointCloud, as_cloud
from .limits import blend_factor, limit_surfaces, weighted_mid_surface
from .refine import select_refinements
from .solve import (FitError, least_squares_fit, mba_coefficients, mba_update, normal_equations,
                    smoothness_matrix, solve_spd)

__all__ = [
    "AccuracyReport", "DataPoint", "DepthThreshold", "FitConfig", "FitError", "FitResult",
    "IterationRecord", "PRESETS", "PointCloud", "ResidualSet", "adaptive_fit", "as_cloud",
    "blend_factor", "compute_accuracy", "depth_threshold", "initial_fit", "least_squares_fit",
    "limit_surfaces", "mba_coefficients", "mba_update", "normal_equations", "point_tolerances",
    "read_config", "residuals", "rmse", "select_refinements", "smoothness_matrix", "solve_spd",
    "weighted_mid_surface", "write_config",
]
