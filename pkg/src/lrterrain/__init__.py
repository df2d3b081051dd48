"""
Locally refined (LR) B-spline surfaces for scattered terrain data.

Subpackages: :mod:`lrterrain.fitting` (adaptive approximation),
:mod:`lrterrain.analysis` (contours, extrema, slope) and
:mod:`lrterrain.io` (file formats, rasters, tensor-product export).
"""

from .bspline import (ScaledTensorBSpline, TPSurface, basis_local, eval_tensor, eval_tp_surface,
                      eval_univariate, insert_knot, tp_grid, uniform_knots)
from .lrsurface import Element, LRSurface, Meshline, to_tensor_product

__version__ = "0.1.0"

__all__ = [
    "Element", "LRSurface", "Meshline", "ScaledTensorBSpline", "TPSurface", "basis_local", "eval_tensor",
    "eval_tp_surface", "eval_univariate", "insert_knot", "to_tensor_product", "tp_grid", "uniform_knots",
]
