"""File formats, rasters, IDW gridding and tensor-product export."""

import os
import tempfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrterrain.bspline import TPSurface, uniform_knots
from lrterrain.io import (
    FormatError,
    Raster,
    idw_raster,
    lrsurf_from_string,
    lrsurf_to_string,
    raster_bilinear_eval,
    raster_from_surface,
    read_asc,
    read_contours_csv,
    read_lrsurf,
    read_xyz,
    split_to_tp,
    write_asc,
    write_lrsurf,
)
from lrterrain.lrsurface import LRSurface, Meshline

from synth import random_lr, random_tp

MINIMAL = "LRSURF 1\n0 0 1\n2 0.0 1.0\n2 0.0 1.0\n1\n0 1 0 1 1.0 2.0\n"


def _plane(a=1.0, b=0.0, c=0.0, extent=(0.0, 10.0)):
    """Bilinear LR surface ``a*x + b*y + c`` on a square."""
    lo, hi = extent
    U = np.array([lo, lo, hi, hi])
    C = np.array([[a * x + b * y + c for y in (lo, hi)] for x in (lo, hi)])
    return LRSurface.from_tensor_product(TPSurface(U, U, 1, 1, C))


# ----------------------------------------------------------------------
# XYZ


class TestReadXYZ:
    """Whitespace separated point files."""

    def test_single_line(self, tmp_path):
        f = tmp_path / "a.xyz"
        f.write_text("1 2 3\n")
        np.testing.assert_array_equal(read_xyz(f), [[1, 2, 3]])

    def test_comments_and_blank_lines(self, tmp_path):
        f = tmp_path / "a.xyz"
        f.write_text("# c\n\n1 2 3\n")
        assert read_xyz(f).shape == (1, 3)

    def test_short_line_reports_line_number(self, tmp_path):
        f = tmp_path / "a.xyz"
        f.write_text("1 2\n")
        with pytest.raises(FormatError, match=":1:"):
            read_xyz(f)

    def test_bad_number(self, tmp_path):
        f = tmp_path / "a.xyz"
        f.write_text("1 2 3\n4 five 6\n")
        with pytest.raises(FormatError, match=":2:"):
            read_xyz(f)


# ----------------------------------------------------------------------
# LR surface files


class TestLRSurfFormat:
    """The ``LRSURF 1`` text format."""

    def test_layout(self, rng):
        lr = LRSurface.from_tensor_product(random_tp(rng, n=3))
        lines = lrsurf_to_string(lr).splitlines()
        assert lines[0] == "LRSURF 1"
        assert lines[1] == "2 2 1"
        assert lines[2].split()[0] == "2"
        assert lines[4] == "9"
        assert len(lines) == 5 + 9
        assert len(lines[5].split()) == 4 + 4 + 1 + 1

    def test_minimal_file(self):
        lr = lrsurf_from_string(MINIMAL)
        np.testing.assert_allclose(lr(np.array([0.0, 0.3, 1.0]), np.array([0.0, 0.9, 1.0])), 2.0)

    @pytest.mark.parametrize(
        "text",
        [
            MINIMAL.replace("LRSURF 1", "LRSURF 2"),
            MINIMAL.replace("0 1 0 1 1.0", "0 1 0 1 0.0"),
            MINIMAL.replace("0 1 0 1 1.0", "0 2 0 1 1.0"),
            MINIMAL.replace("0 1 0 1 1.0", "1 0 0 1 1.0"),
            MINIMAL.replace("2 0.0 1.0\n2", "2 1.0 0.0\n2"),
            MINIMAL.replace("\n1\n", "\n2\n"),
        ],
        ids=["version", "zero-scale", "index-range", "non-monotone", "knot-order", "count"],
    )
    def test_invalid_files(self, text):
        with pytest.raises(FormatError):
            lrsurf_from_string(text)

    def test_round_trip_evaluates_identically(self, rng, tmp_path):
        lr = random_lr(rng, insertions=25)
        write_lrsurf(lr, tmp_path / "s.lrsurf")
        back = read_lrsurf(tmp_path / "s.lrsurf")
        u, v = rng.random((2, 1000))
        np.testing.assert_allclose(back(u, v), lr(u, v), atol=1e-15, rtol=0)
        assert back.num_elements == lr.num_elements

    @given(st.integers(0, 2**32 - 1), st.integers(0, 30))
    def test_rewrite_is_byte_identical(self, seed, n):
        lr = random_lr(np.random.default_rng(seed), insertions=n)
        text = lrsurf_to_string(lr)
        assert lrsurf_to_string(lrsurf_from_string(text)) == text


# ----------------------------------------------------------------------
# ESRI ASCII grids


class TestAscFormat:
    """ESRI ASCII raster files."""

    def test_single_cell_round_trip(self, tmp_path):
        r = Raster(1, 1, 10.0, 20.0, 2.5, -9999.0, [[1.25]])
        write_asc(r, tmp_path / "r.asc")
        back = read_asc(tmp_path / "r.asc")
        assert (back.ncols, back.nrows, back.xll, back.yll, back.cellsize, back.nodata) == (1, 1, 10.0, 20.0, 2.5, -9999.0)
        np.testing.assert_array_equal(back.values, [[1.25]])

    def test_header_order(self, tmp_path):
        write_asc(Raster(2, 3, 0.0, 0.0, 1.0), tmp_path / "r.asc")
        keys = [ln.split()[0] for ln in (tmp_path / "r.asc").read_text().splitlines()[:6]]
        assert keys == ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"]

    def test_nodata_serialised(self, tmp_path):
        r = Raster(2, 1, 0.0, 0.0, 1.0, -32768.0, [[-32768.0, 3.0]])
        write_asc(r, tmp_path / "r.asc")
        assert (tmp_path / "r.asc").read_text().splitlines()[6] == "-32768.0 3.0"

    def test_malformed_header(self, tmp_path):
        (tmp_path / "r.asc").write_text("ncols 1\nrows 1\n")
        with pytest.raises(FormatError):
            read_asc(tmp_path / "r.asc")

    @given(st.integers(0, 2**32 - 1))
    def test_rewrite_is_byte_identical(self, seed):
        rng = np.random.default_rng(seed)
        nr, nc = rng.integers(1, 6, 2)
        vals = rng.normal(scale=10.0, size=(nr, nc))
        vals[rng.random((nr, nc)) < 0.2] = -9999.0
        r = Raster(int(nc), int(nr), float(rng.normal()), float(rng.normal()), float(rng.uniform(0.1, 5)), -9999.0, vals)
        with tempfile.TemporaryDirectory() as d:
            a, b = os.path.join(d, "a.asc"), os.path.join(d, "b.asc")
            write_asc(r, a)
            write_asc(read_asc(a), b)
            assert open(a).read() == open(b).read()


# ----------------------------------------------------------------------
# Rasters from surfaces


class TestRasterFromSurface:
    """Sampling a surface at cell centres."""

    def test_constant_surface(self):
        r = raster_from_surface(_plane(0.0, 0.0, 5.0), 1.0)
        assert (r.ncols, r.nrows) == (10, 10)
        np.testing.assert_allclose(r.values, 5.0, atol=1e-13)

    def test_cell_centres_and_orientation(self):
        r = raster_from_surface(_plane(0.0, 1.0), 2.5)
        # row 0 is the northern edge
        np.testing.assert_allclose(r.values[:, 0], [8.75, 6.25, 3.75, 1.25])

    def test_one_and_five_metre_exports(self, rng):
        """Coarse cells only sample the same surface at a subset of the fine centres."""
        U = uniform_knots(0, 20, 6, 2)
        lr = LRSurface.from_tensor_product(TPSurface(U, U, 2, 2, rng.normal(size=(6, 6))))
        fine, coarse = raster_from_surface(lr, 1.0), raster_from_surface(lr, 5.0)
        np.testing.assert_allclose(coarse.values, fine.values[2::5, 2::5], atol=1e-13)

    def test_values_are_pointwise_evaluations(self, rng):
        U = uniform_knots(0, 15, 6, 2)
        lr = LRSurface.from_tensor_product(TPSurface(U, U, 2, 2, rng.normal(size=(6, 6))))
        r = raster_from_surface(lr, 0.7)
        X, Y = r.centers()
        inside = (X <= 15) & (Y <= 15)
        np.testing.assert_allclose(r.values[inside], lr(X[inside], Y[inside]), atol=1e-13)
        assert np.all(r.values[~inside] == r.nodata)

    def test_mask_gives_nodata(self):
        lr = _plane()
        mask = np.zeros(lr.num_elements, bool)
        r = raster_from_surface(lr, 2.0, mask=mask)
        assert np.all(r.values == r.nodata)

    def test_partial_mask(self):
        lr = _plane().insert_meshline(Meshline("u", 5.0, 0.0, 10.0))
        left = lr.element_boxes()[:, 1] <= 5.0
        r = raster_from_surface(lr, 1.0, mask=left)
        X, _ = r.centers()
        assert np.all(r.values[X < 5] != r.nodata)
        assert np.all(r.values[X > 5] == r.nodata)


# ----------------------------------------------------------------------
# IDW


class TestIDW:
    """Radius-limited inverse distance weighting."""

    def test_constant_field(self, rng):
        pts = np.column_stack([rng.uniform(0, 50, 500), rng.uniform(0, 50, 500), np.full(500, 5.0)])
        r = idw_raster(pts, 2.0, R=20.0)
        assert np.all(r.values[r.valid] == 5.0)
        assert r.valid.all()

    def test_coincident_point(self):
        pts = np.array([[0.5, 0.5, -3.0], [3.0, 3.0, 10.0], [0.0, 4.0, 7.0]])
        r = idw_raster(pts, 1.0, R=20.0, extent=(0.0, 4.0, 0.0, 4.0))
        assert r.values[-1, 0] == -3.0

    def test_default_radius(self):
        import inspect
        assert inspect.signature(idw_raster).parameters["R"].default == 20.0

    def test_empty_cells_are_nodata(self):
        pts = np.array([[0.5, 0.5, 1.0], [99.5, 0.5, 2.0]])
        r = idw_raster(pts, 1.0, R=5.0)
        assert r.values[0, 50] == r.nodata

    def test_matches_direct_formula(self, rng):
        pts = np.column_stack([rng.uniform(0, 10, 40), rng.uniform(0, 10, 40), rng.normal(size=40)])
        R = 4.0
        r = idw_raster(pts, 1.0, R=R, extent=(0.0, 10.0, 0.0, 10.0))
        X, Y = r.centers()
        for x, y, val in zip(X.ravel(), Y.ravel(), r.values.ravel()):
            d = np.hypot(pts[:, 0] - x, pts[:, 1] - y)
            w = (np.maximum(0, R - d) / (R * d)) ** 2
            if w.sum() == 0:
                assert val == r.nodata
            else:
                assert val == pytest.approx((w * pts[:, 2]).sum() / w.sum(), rel=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_convex_combination(self, seed):
        rng = np.random.default_rng(seed)
        pts = np.column_stack([rng.uniform(0, 30, 60), rng.uniform(0, 30, 60), rng.normal(size=60)])
        r = idw_raster(pts, 1.5, R=6.0)
        v = r.values[r.valid]
        assert v.min() >= pts[:, 2].min() - 1e-12
        assert v.max() <= pts[:, 2].max() + 1e-12

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            idw_raster(np.zeros((1, 3)), 1.0, R=0.0)


# ----------------------------------------------------------------------
# Bilinear raster lookup


class TestBilinear:
    """Bilinear interpolation between cell centres."""

    def test_at_cell_centre(self, rng):
        r = Raster(4, 3, 0.0, 0.0, 2.0, -9999.0, rng.normal(size=(3, 4)))
        X, Y = r.centers()
        np.testing.assert_allclose(raster_bilinear_eval(r, X, Y), r.values, atol=1e-15)

    def test_plane_reproduction(self, rng):
        r = Raster(6, 5, 10.0, 20.0, 1.5, -9999.0)
        X, Y = r.centers()
        r.values = 2 * X - 0.5 * Y + 1
        x = rng.uniform(10 + 0.75, 10 + 6 * 1.5 - 0.75, 200)
        y = rng.uniform(20 + 0.75, 20 + 5 * 1.5 - 0.75, 200)
        np.testing.assert_allclose(raster_bilinear_eval(r, x, y), 2 * x - 0.5 * y + 1, atol=1e-12)

    def test_two_by_two_centre(self):
        r = Raster(2, 2, 0.0, 0.0, 1.0, -9999.0, [[1.0, 2.0], [0.0, 1.0]])
        assert raster_bilinear_eval(r, 1.0, 1.0) == pytest.approx(1.0)

    def test_nodata_neighbour(self):
        r = Raster(2, 2, 0.0, 0.0, 1.0, -9999.0, [[1.0, -9999.0], [0.0, 1.0]])
        assert raster_bilinear_eval(r, 1.0, 1.0) == -9999.0

    def test_outside_extent(self):
        r = Raster(2, 2, 0.0, 0.0, 1.0, -9999.0, [[1.0, 2.0], [0.0, 1.0]])
        assert raster_bilinear_eval(r, 3.0, 1.0) == -9999.0


# ----------------------------------------------------------------------
# Splitting into tensor-product patches


class TestSplitToTP:
    """Recursive splitting of an LR surface into tensor-product pieces."""

    def test_tensor_product_input(self, rng):
        s = random_tp(rng, n=6)
        ps = split_to_tp(LRSurface.from_tensor_product(s), 0)
        assert len(ps) == 1
        np.testing.assert_array_equal(ps.patches[0].coefs, s.coefs)

    def test_fidelity_and_tiling(self, rng):
        lr = random_lr(rng, insertions=30)
        ps = split_to_tp(lr, 0)
        u, v = rng.random((2, 1000))
        np.testing.assert_allclose(ps.evaluate(u, v), lr(u, v), atol=1e-10)
        rects = np.array([[a, b, c, d] for (a, b), (c, d) in ps.rects])
        assert ((rects[:, 1] - rects[:, 0]) * (rects[:, 3] - rects[:, 2])).sum() == pytest.approx(1.0)
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                ou = min(rects[i, 1], rects[j, 1]) - max(rects[i, 0], rects[j, 0])
                ov = min(rects[i, 3], rects[j, 3]) - max(rects[i, 2], rects[j, 2])
                assert ou <= 0 or ov <= 0

    def test_patches_are_tensor_product_on_their_rectangle(self, rng):
        lr = random_lr(rng, insertions=20)
        ps = split_to_tp(lr, 0)
        for tp, rect in zip(ps.patches, ps.rects):
            assert tp.domain == rect

    def test_count_monotone_in_threshold(self, rng):
        lr = random_lr(rng, insertions=40)
        counts = [len(split_to_tp(lr, m)) for m in range(0, 14, 2)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[0] > 1

    def test_adjacency_shares_an_edge(self, rng):
        ps = split_to_tp(random_lr(rng, insertions=20), 0)
        for a, b in ps.adjacency:
            (a0, a1), (a2, a3) = ps.rects[a]
            (b0, b1), (b2, b3) = ps.rects[b]
            touch_u = (a1 == b0 or b1 == a0) and min(a3, b3) > max(a2, b2)
            touch_v = (a3 == b2 or b3 == a2) and min(a1, b1) > max(a0, b0)
            assert touch_u or touch_v


# ----------------------------------------------------------------------
# Contour CSV


def test_contour_csv_round_trip(tmp_path):
    from lrterrain.analysis import CurveBranch
    from lrterrain.io import write_contours_csv

    br = [CurveBranch(1.0, np.array([[0.0, 0.0], [1.0, 0.5]]), False, "boundary"),
          CurveBranch(2.0, np.array([[0.1, 0.1], [0.2, 0.1], [0.2, 0.2]]), True, "closed")]
    write_contours_csv(br, tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "level,curve_id,closed,seq,x,y"
    back = read_contours_csv(tmp_path / "c.csv")
    assert [b["closed"] for b in back] == [False, True]
    np.testing.assert_array_equal(back[1]["points"], br[1].points)
