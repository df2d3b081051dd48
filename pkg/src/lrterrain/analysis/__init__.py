"""Contours, extremal points and slope of spline surfaces."""

from .contour import (Connection, ContourError, ContourSet, CurveBranch, GuidePoint, Topology, contour,
                      merge_across_boundaries, topology_detect, trace_branch, trace_connection)
from .extrema import (ExtremalPoint, extremal_points, point_in_polygon, polygon_area, region_polygon,
                      trigger_regions)
from .slope import slope

__all__ = [
    "Connection", "ContourError", "ContourSet", "CurveBranch", "ExtremalPoint", "GuidePoint", "Topology",
    "contour", "extremal_points", "merge_across_boundaries", "point_in_polygon", "polygon_area",
    "region_polygon", "slope", "topology_detect", "trace_branch", "trace_connection", "trigger_regions",
]
