"""Contours, extremal points and slope rasters."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from skimage import measure

from lrterrain.analysis import (CurveBranch, contour, extremal_points,
                                merge_across_boundaries, point_in_polygon, polygon_area, slope,
                                topology_detect, trace_branch)
from lrterrain.bspline import TPSurface, greville_abscissae, uniform_knots
from lrterrain.io import split_to_tp
from lrterrain.lrsurface import LRSurface, Meshline

from synth import random_lr, random_tp


def _square_coefs(knots):
    """Quadratic B-spline coefficients of ``x**2``: the blossom ``t[i+1] * t[i+2]``."""
    t = np.asarray(knots)
    return t[1:-2] * t[2:-1]


def radial_surface(n=10, extent=2.0):
    """``x**2 + y**2`` represented exactly by a bi-quadratic tensor product."""
    U = uniform_knots(-extent, extent, n, 2)
    c = _square_coefs(U)
    return TPSurface(U, U, 2, 2, c[:, None] + c[None, :])


def plane_x(extent=(0.0, 1.0), n=2):
    """``F(x, y) = x`` as a bilinear surface."""
    U = uniform_knots(extent[0], extent[1], n, 1)
    g = greville_abscissae(U, 1)
    return TPSurface(U, U, 1, 1, np.repeat(g[:, None], n, axis=1))


def bump_surface(n=16, extent=10.0, centre=(4.3, 5.6), sigma=1.5):
    """Smooth single bump: a Gaussian sampled at the Greville points of a bi-cubic space."""
    U = uniform_knots(0.0, extent, n, 3)
    g = greville_abscissae(U, 3)
    X, Y = np.meshgrid(g, g, indexing="ij")
    C = np.exp(-((X - centre[0]) ** 2 + (Y - centre[1]) ** 2) / (2 * sigma ** 2))
    return LRSurface.from_tensor_product(TPSurface(U, U, 3, 3, C))


def _values(surf, pts):
    if isinstance(surf, TPSurface):
        return surf(pts[:, 0], pts[:, 1])
    return surf.evaluate(pts[:, 0], pts[:, 1])


def _grid_branches(surf, level, n=1024):
    """Marching-squares branch count and closed count on an ``n x n`` grid."""
    (u0, u1), (v0, v1) = surf.domain
    Z = surf.evaluate_grid(np.linspace(u0, u1, n), np.linspace(v0, v1, n))
    curves = measure.find_contours(Z, level)
    closed = sum(bool(np.allclose(c[0], c[-1])) and len(c) > 3 for c in curves)
    return len(curves), closed


class TestContourBasics:
    """Simple surfaces with known level curves."""

    def test_plane_gives_one_open_branch(self):
        cs = contour(plane_x(), [0.5])
        assert len(cs) == 1
        b = cs[0]
        assert not b.closed
        assert np.allclose(b.points[:, 0], 0.5, atol=1e-12)
        assert {round(b.points[0, 1]), round(b.points[-1, 1])} == {0, 1}

    def test_level_outside_range_is_empty(self):
        s = radial_surface()
        assert len(contour(s, [100.0])) == 0
        assert len(contour(s, [-1.0])) == 0

    def test_empty_level_list(self):
        assert len(contour(radial_surface(), [])) == 0

    @pytest.mark.parametrize("bad", [dict(levels=[np.nan]), dict(levels=[1.0], tolerance=0.0)])
    def test_rejects_bad_arguments(self, bad):
        with pytest.raises(ValueError):
            contour(radial_surface(), **bad)

    def test_unit_circle(self):
        cs = contour(radial_surface(), [1.0], tolerance=1e-9)
        assert len(cs) == 1 and cs[0].closed
        r = np.hypot(*cs[0].points.T)
        assert np.abs(r - 1).max() < 1e-6
        assert cs[0].length() == pytest.approx(2 * np.pi, rel=1e-2)

    @pytest.mark.parametrize("radius", [0.3, 1.0, 1.7])
    def test_vertices_lie_on_the_level(self, radius):
        s = radial_surface()
        a = radius ** 2
        for b in contour(s, [a], tolerance=1e-9):
            assert np.abs(_values(s, b.points) - a).max() < 1e-9

    def test_circle_across_lr_pieces(self):
        # refinement splits the circle over several tensor-product pieces
        s = LRSurface.from_tensor_product(radial_surface(6))
        s = s.insert_meshline(Meshline("u", 0.1, -2.0, 2.0)).insert_meshline(Meshline("v", -0.2, -2.0, 0.0))
        assert len(split_to_tp(s).patches) > 1
        cs = contour(s, [1.0])
        assert len(cs) == 1 and cs[0].closed
        assert np.abs(np.hypot(*cs[0].points.T) - 1).max() < 1e-6

    def test_levels_are_kept_apart(self):
        cs = contour(radial_surface(), [0.25, 1.0, 2.25])
        assert cs.levels() == [0.25, 1.0, 2.25]
        for a in cs.levels():
            assert len(cs.at(a)) == 1

    def test_mask_clips_branch(self):
        s = LRSurface.from_tensor_product(radial_surface(4))
        mask = np.zeros(s.num_elements, dtype=bool)
        mask[s.locate(np.array([1.5]), np.array([1.5]))] = True
        full = contour(s, [1.0])
        clipped = contour(s, [1.0], mask=mask)
        assert all(not b.closed for b in clipped)
        assert sum(len(b.points) for b in clipped) < len(full[0].points)


class TestTopology:
    """Guide points and their connections."""

    def test_constant_surface_rejected(self):
        U = uniform_knots(0, 1, 3, 2)
        s = TPSurface(U, U, 2, 2, np.full((3, 3), 2.0))
        topo = topology_detect(s, 1.0)
        assert topo.connections == [] and topo.subdivisions == 0

    def test_plane_monotone_case(self):
        topo = topology_detect(plane_x(), 0.5)
        assert len(topo.crossings) == 2
        assert len(topo.connections) == 1
        assert topo.subdivisions == 0

    def test_guide_points_on_level(self):
        s = radial_surface()
        topo = topology_detect(s, 1.0)
        g = np.array([[c.start.u, c.start.v] for c in topo.connections]
                     + [[c.end.u, c.end.v] for c in topo.connections])
        assert np.abs(s(g[:, 0], g[:, 1]) - 1.0).max() < 1e-9

    def test_circle_needs_subdivision(self):
        topo = topology_detect(radial_surface(), 1.0)
        assert topo.subdivisions > 0
        assert topo.unresolved == []
        chains = topo.chains(1e-9)
        assert len(chains) == 1 and chains[0][1]

    def test_two_nested_loops(self):
        # ring-shaped ridge: level curves are two concentric loops
        U = uniform_knots(-2, 2, 24, 3)
        g = greville_abscissae(U, 3)
        X, Y = np.meshgrid(g, g, indexing="ij")
        R = np.hypot(X, Y)
        s = LRSurface.from_tensor_product(TPSurface(U, U, 3, 3, np.exp(-((R - 1.0) / 0.15) ** 2)))
        cs = contour(s, [0.5])
        assert len(cs) == 2 and all(b.closed for b in cs)
        assert (len(cs), 2) == _grid_branches(s, 0.5)

    def test_trace_visits_guides(self):
        s = radial_surface()
        topo = topology_detect(s, 1.0)
        (guides, closed), = topo.chains(1e-9)
        br = trace_branch(s, 1.0, topo.connections)
        assert br.closed
        assert len(br.points) >= len(guides)
        for g in guides:
            assert np.hypot(br.points[:, 0] - g.u, br.points[:, 1] - g.v).min() < 1e-9

    def test_trace_straight_line(self):
        s = plane_x()
        topo = topology_detect(s, 0.25)
        br = trace_branch(s, 0.25, topo.connections)
        assert len(br.points) >= 2
        assert np.allclose(br.points[:, 0], 0.25)

    def test_trace_needs_guides(self):
        with pytest.raises(ValueError):
            trace_branch(plane_x(), 0.5, [])


class TestMarchingSquaresOracle:
    """Branch counts and closedness agree with a dense-grid contourer."""

    def test_random_surfaces(self, rng):
        for _ in range(10):
            s = LRSurface.from_tensor_product(random_tp(rng, n=5, degree=2))
            lo, hi = s.coefs.min(), s.coefs.max()
            for a in rng.uniform(lo, hi, 5):
                cs = contour(s, [a])
                n, closed = _grid_branches(s, a)
                assert len(cs) == n
                assert sum(b.closed for b in cs) == closed

    def test_refined_surfaces(self, rng):
        for _ in range(3):
            s = random_lr(rng, n=5, degree=2, insertions=6)
            for a in np.quantile(s.coefs, [0.2, 0.4, 0.6, 0.8]):
                cs = contour(s, [a])
                assert len(cs) == _grid_branches(s, a)[0]
                for b in cs:
                    assert np.abs(s.evaluate(b.points[:, 0], b.points[:, 1]) - a).max() < 1e-9


class TestMerge:
    """Stitching branch pieces across patch interfaces."""

    def test_quartered_circle(self):
        t = np.linspace(0, 2 * np.pi, 401)
        quarters = [CurveBranch(1.0, np.column_stack([np.cos(t[k:k + 101]), np.sin(t[k:k + 101])]))
                    for k in range(0, 400, 100)]
        quarters[1] = CurveBranch(1.0, quarters[1].points[::-1])  # orientation must not matter
        merged = merge_across_boundaries(quarters)
        assert len(merged) == 1 and merged[0].closed

    def test_distinct_levels_do_not_merge(self):
        a = CurveBranch(1.0, [[0, 0], [1, 0]])
        b = CurveBranch(2.0, [[1, 0], [2, 0]])
        assert len(merge_across_boundaries([a, b])) == 2

    def test_collinear_segments(self):
        a = CurveBranch(0.0, [[0, 0], [0.5, 0]])
        b = CurveBranch(0.0, [[0.5, 0], [1, 0]])
        (m,) = merge_across_boundaries([a, b])
        assert not m.closed
        assert np.allclose(m.points, [[0, 0], [0.5, 0], [1, 0]]) or np.allclose(m.points[::-1],
                                                                               [[0, 0], [0.5, 0], [1, 0]])

    def test_branch_point_left_alone(self):
        arms = [CurveBranch(0.0, [[0, 0], [np.cos(t), np.sin(t)]]) for t in (0.0, 2.0, 4.0)]
        assert len(merge_across_boundaries(arms)) == 3

    @given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1))
    def test_length_is_conserved(self, pieces, seed):
        rng = np.random.default_rng(seed)
        pts = np.cumsum(rng.normal(size=(60, 2)), axis=0)
        cuts = np.sort(rng.choice(np.arange(1, 59), pieces - 1, replace=False))
        bounds = [0, *cuts, 59]
        parts = [CurveBranch(0.0, pts[a:b + 1]) for a, b in zip(bounds[:-1], bounds[1:])]
        rng.shuffle(parts)
        before = sum(p.length() for p in parts)
        after = sum(m.length() for m in merge_across_boundaries(parts))
        assert after == pytest.approx(before, rel=1e-9)


class TestPolygons:
    """Helpers used to build extremum search regions."""

    def test_point_in_square(self):
        sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        inside = point_in_polygon([0.5, 1.5, 0.2], [0.5, 0.5, 0.9], sq)
        assert inside.tolist() == [True, False, True]
        assert polygon_area(sq) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def bump():
    s = bump_surface()
    return s, contour(s, np.arange(0.1, 1.0, 0.1))


class TestExtremalPoints:
    """Extremum search triggered by contour regions."""

    def test_single_maximum(self, bump):
        s, cs = bump
        ext = extremal_points(s, cs)
        assert [e.kind for e in ext] == ["max"]
        # dense grid, then a local refinement around its best sample
        x = np.linspace(0, 10, 1001)
        Z = s.evaluate_grid(x, x)
        i, j = np.unravel_index(np.argmax(Z), Z.shape)
        xl = np.linspace(x[i] - 0.01, x[i] + 0.01, 401)
        yl = np.linspace(x[j] - 0.01, x[j] + 0.01, 401)
        Zl = s.evaluate_grid(xl, yl)
        k, l = np.unravel_index(np.argmax(Zl), Zl.shape)
        assert np.hypot(ext[0].x - xl[k], ext[0].y - yl[l]) < 1e-3
        assert ext[0].z >= Zl.max() - 1e-12

    def test_gradient_vanishes_and_point_is_inside_trigger(self, bump):
        s, cs = bump
        for e in extremal_points(s, cs):
            if e.on_boundary:
                continue
            gx = s.evaluate(e.x, e.y, 1, 0)
            gy = s.evaluate(e.x, e.y, 0, 1)
            assert np.hypot(gx, gy) < 1e-7
            loop = cs[e.trigger]
            assert loop.closed
            assert point_in_polygon(e.x, e.y, loop.points)[0]

    def test_plane_has_no_interior_extremum(self):
        s = LRSurface.from_tensor_product(plane_x((0.0, 10.0), 3))
        ext = extremal_points(s, contour(s, [2.0, 5.0, 8.0]))
        assert all(e.on_boundary for e in ext)

    def test_minimum_of_bowl(self):
        s = LRSurface.from_tensor_product(radial_surface())
        ext = extremal_points(s, contour(s, [0.5, 1.0]))
        mins = [e for e in ext if not e.on_boundary]
        assert [e.kind for e in mins] == ["min"]
        assert np.hypot(mins[0].x, mins[0].y) < 1e-7

    def test_prominence_floor(self, bump):
        s, cs = bump
        top = max(extremal_points(s, cs), key=lambda e: e.z)
        floor = top.z - top.trigger_level + 1e-6
        assert extremal_points(s, cs, prominence=floor) == []


class TestSlope:
    """Slope rasters in degrees."""

    def test_constant_surface(self):
        U = uniform_knots(0, 10, 3, 2)
        s = LRSurface.from_tensor_product(TPSurface(U, U, 2, 2, np.full((3, 3), 7.0)))
        r = slope(s, 1.0)
        # basis derivatives sum to zero only up to rounding
        assert np.abs(r.values).max() < 1e-12

    def test_plane_is_45_degrees(self):
        s = LRSurface.from_tensor_product(plane_x((0.0, 10.0), 3))
        r = slope(s, 0.5)
        assert r.values.shape == (20, 20)
        assert np.allclose(r.values, 45.0, atol=1e-10)

    def test_matches_finite_differences(self):
        s = bump_surface()
        r = slope(s, 0.25)
        X, Y = r.centers()
        h = 1e-5
        gx = (s.evaluate(X.ravel() + h, Y.ravel()) - s.evaluate(X.ravel() - h, Y.ravel())) / (2 * h)
        gy = (s.evaluate(X.ravel(), Y.ravel() + h) - s.evaluate(X.ravel(), Y.ravel() - h)) / (2 * h)
        fd = np.degrees(np.arctan(np.hypot(gx, gy))).reshape(X.shape)
        assert np.abs(fd - r.values).max() < 0.1

    def test_mask_gives_nodata(self):
        s = LRSurface.from_tensor_product(plane_x((0.0, 10.0), 3))
        mask = np.zeros(s.num_elements, dtype=bool)
        mask[0] = True
        r = slope(s, 1.0, mask=mask)
        assert np.any(r.values == r.nodata) and np.any(r.values == 45.0)

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            slope(bump_surface(), 0.0)
