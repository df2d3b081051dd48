"""Univariate and tensor-product B-spline primitives."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrterrain.bspline import (
    ScaledTensorBSpline,
    TPSurface,
    basis_funs,
    check_global_knots,
    eval_tensor,
    eval_tp_surface,
    eval_univariate,
    find_span,
    greville_abscissae,
    insert_knot,
    support,
    tp_grid,
    tp_insert_knot,
    uniform_knots,
)


def cox_de_boor(t, p, u):
    """Exact-arithmetic recursion, half-open intervals, 0/0 terms dropped."""
    t = [Fraction(x) for x in t]
    u = Fraction(u)
    if p == 0:
        return Fraction(int(t[0] <= u < t[1]))
    out = Fraction(0)
    if t[p] != t[0]:
        out += (u - t[0]) / (t[p] - t[0]) * cox_de_boor(t[:-1], p - 1, u)
    if t[p + 1] != t[1]:
        out += (t[p + 1] - u) / (t[p + 1] - t[1]) * cox_de_boor(t[1:], p - 1, u)
    return out


@st.composite
def local_knots(draw, max_degree=4):
    p = draw(st.integers(0, max_degree))
    # integer grid keeps knot repetitions frequent
    t = sorted(draw(st.lists(st.integers(0, 6), min_size=p + 2, max_size=p + 2)))
    if t[0] == t[-1]:
        t[-1] += 1
    return p, [float(x) for x in t]


# ----------------------------------------------------------------------
# Single B-splines


class TestEvalUnivariate:
    """Values of one B-spline given its local knots."""

    def test_quadratic_midpoint(self):
        assert cox_de_boor((0, 1, 2, 3), 2, Fraction(3, 2)) == Fraction(3, 4)
        assert eval_univariate((0, 1, 2, 3), 2, 1.5) == pytest.approx(0.75, abs=1e-15)

    def test_outside_support_is_zero(self):
        assert eval_univariate((0, 1, 2, 3), 2, 3.5) == 0.0
        assert eval_univariate((0, 1, 2, 3), 2, -0.1) == 0.0

    def test_repeated_knots_at_left_end(self):
        assert cox_de_boor((0, 0, 0, 1), 2, 0) == 1
        assert eval_univariate((0, 0, 0, 1), 2, 0.0) == 1.0

    @pytest.mark.parametrize("knots", [(0, 1, 0.5, 2), (1, 1, 1, 1), (0, 1, 2)])
    def test_invalid_knots_rejected(self, knots):
        with pytest.raises(ValueError):
            eval_univariate(knots, 2, 0.5)

    def test_vectorised_matches_scalar(self):
        u = np.linspace(-0.5, 3.5, 41)
        vals = eval_univariate((0, 1, 2, 3), 2, u)
        np.testing.assert_array_equal(vals, [eval_univariate((0, 1, 2, 3), 2, x) for x in u])

    @given(local_knots(), st.fractions(-1, 8, max_denominator=16))
    def test_matches_exact_recursion(self, pk, u):
        """Floating evaluation agrees with the rational recursion."""
        p, t = pk
        expect = float(cox_de_boor(t, p, u))
        assert eval_univariate(t, p, float(u)) == pytest.approx(expect, abs=1e-13)

    @given(local_knots(), st.floats(0, 1))
    def test_first_derivative_matches_central_difference(self, pk, frac):
        p, t = pk
        u = t[0] + frac * (t[-1] - t[0])
        if min(abs(u - k) for k in t) < 1e-3:
            return
        h = 1e-6
        fd = (eval_univariate(t, p, u + h) - eval_univariate(t, p, u - h)) / (2 * h)
        d = eval_univariate(t, p, u, deriv=1)
        assert d == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_derivative_above_degree_vanishes(self):
        assert eval_univariate((0, 1, 2, 3), 2, 1.5, deriv=3) == 0.0


class TestInsertKnot:
    """Splitting one B-spline into two by a new knot."""

    def test_interior_new_knot(self):
        k1, k2, a1, a2 = insert_knot((0, 1, 2, 3), 2, 1.5)
        np.testing.assert_array_equal(k1, [0, 1, 1.5, 2])
        np.testing.assert_array_equal(k2, [1, 1.5, 2, 3])
        assert (a1, a2) == (0.75, 0.75)

    def test_existing_knot_raises_multiplicity(self):
        k1, k2, a1, a2 = insert_knot((0, 1, 2, 3), 2, 2.0)
        np.testing.assert_array_equal(k1, [0, 1, 2, 2])
        np.testing.assert_array_equal(k2, [1, 2, 2, 3])
        assert (a1, a2) == (1.0, 0.5)

    def test_symmetric_midpoint(self):
        # four local knots describe a quadratic B-spline
        *_, a1, a2 = insert_knot((0, 0, 1, 1), 2, 0.5)
        assert (a1, a2) == (0.5, 0.5)

    @pytest.mark.parametrize("a", [0.0, 3.0, -1.0, 4.0])
    def test_outside_open_support(self, a):
        with pytest.raises(ValueError):
            insert_knot((0, 1, 2, 3), 2, a)

    def test_identity_on_random_parameters(self, rng):
        k1, k2, a1, a2 = insert_knot((0, 1, 2, 3), 2, 1.5)
        u = rng.uniform(-0.5, 3.5, 10)
        lhs = eval_univariate((0, 1, 2, 3), 2, u)
        rhs = a1 * eval_univariate(k1, 2, u) + a2 * eval_univariate(k2, 2, u)
        np.testing.assert_allclose(lhs, rhs, atol=1e-15)

    @given(local_knots(), st.floats(0.001, 0.999), st.floats(-0.2, 1.2))
    def test_boehm_identity(self, pk, fa, fu):
        p, t = pk
        a = t[0] + fa * (t[-1] - t[0])
        u = t[0] + fu * (t[-1] - t[0])
        k1, k2, a1, a2 = insert_knot(t, p, a)
        diff = eval_univariate(t, p, u) - a1 * eval_univariate(k1, p, u) - a2 * eval_univariate(k2, p, u)
        assert abs(diff) < 1e-12


# ----------------------------------------------------------------------
# Scaled tensor B-splines


class TestScaledTensor:
    """Evaluation and support of scaled tensor-product B-splines."""

    def test_product_of_univariate(self):
        b = ScaledTensorBSpline((0, 1, 2, 3), (0, 1, 2, 3), 2, 2)
        assert eval_tensor(b, 1.5, 1.5) == pytest.approx(0.5625, abs=1e-15)

    def test_scale_multiplies(self):
        b = ScaledTensorBSpline((0, 1, 2, 3), (0, 1, 2, 3), 2, 2, scale=0.5)
        assert eval_tensor(b, 1.5, 1.5) == pytest.approx(0.28125, abs=1e-15)

    def test_support(self):
        assert support(ScaledTensorBSpline((0, 1, 2, 3), (2, 3, 4, 5), 2, 2)) == ((0, 3), (2, 5))
        assert support(ScaledTensorBSpline((0, 0, 0, 1), (0, 0, 0, 1), 2, 2)) == ((0, 1), (0, 1))

    def test_degenerate_support_rejected(self):
        with pytest.raises(ValueError):
            ScaledTensorBSpline((0, 1, 2, 3), (1, 1, 1, 1), 2, 2)

    @pytest.mark.parametrize("scale", [0.0, -0.5, 1.5])
    def test_scale_outside_unit_interval_rejected(self, scale):
        with pytest.raises(ValueError):
            ScaledTensorBSpline((0, 1, 2, 3), (0, 1, 2, 3), 2, 2, scale=scale)

    def test_zero_outside_support(self, rng):
        b = ScaledTensorBSpline((0, 1, 2, 3), (2, 3, 4, 5), 2, 2, scale=0.7)
        u = rng.uniform(-5, 10, 2000)
        v = rng.uniform(-5, 10, 2000)
        out = (u < 0) | (u > 3) | (v < 2) | (v > 5)
        for du in range(3):
            assert np.all(eval_tensor(b, u[out], v[out], du, 2 - du) == 0.0)

    def test_mixed_derivative(self):
        b = ScaledTensorBSpline((0, 1, 2, 3), (0, 1, 2, 4), 2, 2, scale=0.5)
        d = eval_tensor(b, 0.5, 2.5, 1, 1)
        expect = 0.5 * eval_univariate((0, 1, 2, 3), 2, 0.5, 1) * eval_univariate((0, 1, 2, 4), 2, 2.5, 1)
        assert d == pytest.approx(expect)


# ----------------------------------------------------------------------
# Tensor-product surfaces


class TestTPSurface:
    """Plain tensor-product spline surfaces."""

    def test_constant_coefficients(self, rng):
        U = uniform_knots(0, 4, 6, 2)
        s = TPSurface(U, U, 2, 2, np.full((6, 6), 7.0))
        u, v = rng.uniform(0, 4, (2, 100))
        np.testing.assert_allclose(s(u, v), 7.0, atol=1e-13)

    def test_bilinear_centre(self):
        s = TPSurface([0, 0, 1, 1], [0, 0, 1, 1], 1, 1, [[0, 1], [1, 2]])
        assert eval_tp_surface(s, 0.5, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_linear_precision(self, rng):
        U = np.array([0, 0, 0.3, 0.45, 1, 1])
        V = np.array([0, 0, 0.5, 1, 1])
        gu = greville_abscissae(U, 1)
        s = TPSurface(U, V, 1, 1, np.repeat(gu[:, None], 3, axis=1))
        u, v = rng.random((2, 200))
        np.testing.assert_allclose(s(u, v), u, atol=1e-12)

    def test_closed_right_end(self):
        s = TPSurface([0, 0, 1, 1], [0, 0, 1, 1], 1, 1, [[0, 1], [1, 2]])
        assert s(1.0, 1.0) == pytest.approx(2.0)

    @pytest.mark.parametrize("uv", [(-0.1, 0.5), (0.5, 1.1), (2.0, 2.0)])
    def test_out_of_domain(self, uv):
        s = TPSurface([0, 0, 1, 1], [0, 0, 1, 1], 1, 1, [[0, 1], [1, 2]])
        with pytest.raises(ValueError):
            s(*uv)

    def test_coefficient_shape_checked(self):
        with pytest.raises(ValueError):
            TPSurface([0, 0, 1, 1], [0, 0, 1, 1], 1, 1, np.zeros((3, 2)))

    def test_multiplicity_limit(self):
        with pytest.raises(ValueError):
            check_global_knots([0, 0, 0, 0, 1, 1, 1], 2)

    def test_knot_insertion_preserves_surface(self, rng):
        U = uniform_knots(0, 1, 5, 3)
        s = TPSurface(U, U, 3, 3, rng.normal(size=(5, 5)))
        t = tp_insert_knot(tp_insert_knot(s, 0, 0.37), 1, 0.5, times=2)
        u, v = rng.random((2, 500))
        np.testing.assert_allclose(t(u, v), s(u, v), atol=1e-12)

    def test_grid_matches_pointwise(self, rng):
        U = uniform_knots(0, 2, 7, 3)
        s = TPSurface(U, U, 3, 3, rng.normal(size=(7, 7)))
        g = np.linspace(0, 2, 33)
        for du, dv in [(0, 0), (1, 0), (1, 1), (0, 2)]:
            G = tp_grid(s, g, g, du, dv)
            X, Y = np.meshgrid(g, g, indexing="ij")
            np.testing.assert_allclose(G, s(X, Y, du, dv), atol=1e-10)


class TestPartitionOfUnity:
    """Basis functions of a global knot vector sum to one."""

    @given(st.integers(0, 4), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8), st.data())
    def test_random_global_knots(self, p, gaps, data):
        inner = np.cumsum(gaps)
        U = np.concatenate([np.zeros(p + 1), inner[:-1], np.full(p + 1, inner[-1])])
        n = U.size - p - 1
        u = np.array(data.draw(st.lists(st.floats(0, 1), min_size=1, max_size=20))) * inner[-1]
        span, N = basis_funs(U, p, u)
        np.testing.assert_array_equal(span, find_span(U, p, n, u))
        assert np.all(span >= p)
        np.testing.assert_allclose(N.sum(axis=-1), 1.0, atol=1e-12)
