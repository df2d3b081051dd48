"""File formats, rasters and tensor-product export."""

from .formats import (
    FormatError,
    lrsurf_from_string,
    lrsurf_to_string,
    read_asc,
    read_contours_csv,
    read_lrsurf,
    read_xyz,
    write_asc,
    write_contours_csv,
    write_extrema_csv,
    write_lrsurf,
    write_patch_set,
    write_xyz,
)
from .raster import Raster, idw_raster, raster_bilinear_eval, raster_from_surface
from .split import TPPatchSet, patch_on_rectangle, refine_local, split_to_tp
