"""
Univariate and tensor-product B-spline primitives.

Single B-splines are described by their local knot vectors (``p + 2`` knots
for degree ``p``).  All evaluation routines are vectorised over points and,
where it matters for speed, over many local knot vectors at once.
"""

from dataclasses import dataclass, field

import numpy as np


def check_local_knots(knots, degree):
    """Validate a local knot vector and return it as a float array."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    t = np.asarray(knots, dtype=float)
    if t.ndim != 1 or t.size != degree + 2:
        raise ValueError(f"a degree {degree} B-spline needs {degree + 2} knots, got {t.size}")
    if not np.all(np.isfinite(t)):
        raise ValueError("knots must be finite")
    if np.any(np.diff(t) < 0):
        raise ValueError("knots must be non-decreasing")
    if not t[-1] > t[0]:
        raise ValueError("knots must not all be equal")
    return t


def check_global_knots(knots, degree):
    """Validate a global (tensor-product) knot vector and return it as a float array."""
    t = np.asarray(knots, dtype=float)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if t.ndim != 1 or t.size < degree + 2:
        raise ValueError("knot vector too short for the degree")
    if np.any(np.diff(t) < 0):
        raise ValueError("knots must be non-decreasing")
    if np.any(t[degree + 1:] <= t[:-degree - 1]):
        raise ValueError(f"knot multiplicity exceeds degree + 1 = {degree + 1}")
    return t


def _inv(d):
    out = np.zeros(d.shape)
    np.divide(1.0, d, out=out, where=d != 0)
    return out


_CHUNK = 1 << 15


def basis_local(T, degree, u, deriv=0, right=None):
    """
    Evaluate many single B-splines at once.

    Parameters
    ----------
    T : array_like, shape (n, degree + 2)
        One local knot vector per row.
    degree : int
    u : array_like, shape (n,)
        Parameter value for each row.
    deriv : int
        Derivative order.
    right : float, optional
        Right end of the global domain.  At ``u == right`` the last non-empty
        knot interval is treated as closed, so values are limits from inside.

    Returns
    -------
    ndarray, shape (n,)
    """
    T = np.asarray(T, dtype=float)
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if degree - deriv < 0:
        return np.zeros(n)
    if n <= _CHUNK:
        return _basis_block(T, degree, u, deriv, right)
    out = np.empty(n)
    for s in range(0, n, _CHUNK):
        out[s:s + _CHUNK] = _basis_block(T[s:s + _CHUNK], degree, u[s:s + _CHUNK], deriv, right)
    return out


def _basis_block(T, degree, u, deriv, right):
    # knot rows are kept contiguous; each recursion level combines neighbours
    t = [np.ascontiguousarray(T[:, i]) for i in range(degree + 2)]
    N = [((t[i] <= u) & (u < t[i + 1])).astype(float) for i in range(degree + 1)]
    if right is not None:
        end = u == right
        if np.any(end):
            for i in range(degree + 1):
                N[i][end] = ((t[i][end] < t[i + 1][end]) & (t[i + 1][end] == right)).astype(float)
    q = degree - deriv
    for k in range(1, q + 1):
        m = degree + 1 - k
        nxt = []
        for i in range(m):
            a = (u - t[i]) * _inv(t[i + k] - t[i]) * N[i]
            b = (t[i + k + 1] - u) * _inv(t[i + k + 1] - t[i + 1]) * N[i + 1]
            nxt.append(a + b)
        N = nxt
    for k in range(q + 1, degree + 1):
        m = degree + 1 - k
        N = [k * (N[i] * _inv(t[i + k] - t[i]) - N[i + 1] * _inv(t[i + k + 1] - t[i + 1])) for i in range(m)]
    return N[0]


def eval_univariate(knots, degree, u, deriv=0, right=None):
    """
    Value (or derivative) of the B-spline with local knots ``knots``.

    Scalars in, scalar out; arrays in, arrays out.
    """
    if deriv < 0:
        raise ValueError("deriv must be non-negative")
    t = check_local_knots(knots, degree)
    uarr = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(uarr)):
        raise ValueError("u must be finite")
    T = np.broadcast_to(t, (uarr.size, t.size))
    out = basis_local(T, degree, uarr.ravel(), deriv, right).reshape(uarr.shape)
    return float(out[0]) if np.ndim(u) == 0 else out


def insert_knot(knots, degree, a):
    """
    Split one B-spline by inserting the knot ``a`` (Boehm).

    Returns ``(k1, k2, alpha1, alpha2)`` with ``B = alpha1*B[k1] + alpha2*B[k2]``.
    """
    t = check_local_knots(knots, degree)
    p = degree
    if not t[0] < a < t[-1]:
        raise ValueError(f"knot {a} is outside the open support ({t[0]}, {t[-1]})")
    merged = np.insert(t, np.searchsorted(t, a, side="right"), a)
    k1, k2 = merged[:p + 2], merged[1:]
    if a < t[p]:
        alpha1 = (a - t[0]) / (t[p] - t[0])
    else:
        alpha1 = 1.0
    if a <= t[1]:
        alpha2 = 1.0
    else:
        alpha2 = (t[p + 1] - a) / (t[p + 1] - t[1])
    return k1, k2, float(alpha1), float(alpha2)


@dataclass(frozen=True)
class ScaledTensorBSpline:
    """A tensor-product B-spline with a positive scale and a coefficient."""

    uknots: tuple
    vknots: tuple
    degree_u: int
    degree_v: int
    scale: float = 1.0
    coef: object = 0.0

    def __post_init__(self):
        uk = check_local_knots(self.uknots, self.degree_u)
        vk = check_local_knots(self.vknots, self.degree_v)
        if not 0.0 < self.scale <= 1.0 + 1e-12:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        object.__setattr__(self, "uknots", tuple(float(x) for x in uk))
        object.__setattr__(self, "vknots", tuple(float(x) for x in vk))

    @property
    def support(self):
        return support(self)


def support(b):
    """Support rectangle ``((u0, u1), (v0, v1))`` of a tensor B-spline."""
    return (b.uknots[0], b.uknots[-1]), (b.vknots[0], b.vknots[-1])


def eval_tensor(b, u, v, du=0, dv=0):
    """Evaluate ``scale * B(u) * B(v)`` (or a partial derivative of it)."""
    if du < 0 or dv < 0:
        raise ValueError("derivative orders must be non-negative")
    bu = eval_univariate(b.uknots, b.degree_u, u, du)
    bv = eval_univariate(b.vknots, b.degree_v, v, dv)
    return b.scale * bu * bv


def greville(b):
    """Greville point of a tensor B-spline (average of the interior knots)."""
    return _greville_1d(b.uknots, b.degree_u), _greville_1d(b.vknots, b.degree_v)


def _greville_1d(t, p):
    if p == 0:
        return 0.5 * (t[0] + t[1])
    return float(sum(t[1:p + 1]) / p)


# --------------------------------------------------------------------------
# Tensor-product surfaces


@dataclass(frozen=True)
class TPSurface:
    """
    Tensor-product spline surface on clamped or general knot vectors.

    ``coefs`` has shape ``(N1, N2)`` for scalar surfaces or ``(N1, N2, dim)``.
    """

    uknots: np.ndarray
    vknots: np.ndarray
    degree_u: int
    degree_v: int
    coefs: np.ndarray
    dim: int = field(default=1)

    def __post_init__(self):
        U = check_global_knots(self.uknots, self.degree_u)
        V = check_global_knots(self.vknots, self.degree_v)
        c = np.asarray(self.coefs, dtype=float)
        n1, n2 = U.size - self.degree_u - 1, V.size - self.degree_v - 1
        if c.shape[:2] != (n1, n2):
            raise ValueError(f"coefficient grid {c.shape[:2]} does not match knots ({n1}, {n2})")
        dim = 1 if c.ndim == 2 else c.shape[2]
        object.__setattr__(self, "uknots", U)
        object.__setattr__(self, "vknots", V)
        object.__setattr__(self, "coefs", c)
        object.__setattr__(self, "dim", dim)

    @property
    def shape(self):
        return self.coefs.shape[:2]

    @property
    def domain(self):
        p, q = self.degree_u, self.degree_v
        n1, n2 = self.shape
        return (self.uknots[p], self.uknots[n1]), (self.vknots[q], self.vknots[n2])

    def __call__(self, u, v, du=0, dv=0):
        return eval_tp_surface(self, u, v, du, dv)


def find_span(knots, degree, n, u):
    """Index ``i`` with ``t[i] <= u < t[i+1]`` restricted to ``[degree, n-1]``."""
    t = np.asarray(knots)
    i = np.searchsorted(t, u, side="right") - 1
    i = np.clip(i, degree, n - 1)
    # at the right end, step back over empty intervals
    last = n - 1
    while last > degree and t[last] == t[last + 1]:
        last -= 1
    return np.minimum(i, last)


def basis_funs(knots, degree, u, deriv=0):
    """
    The ``degree + 1`` possibly non-zero B-splines of a global knot vector at ``u``.

    Returns ``(span, values)`` with ``values[:, k]`` belonging to B-spline ``span - degree + k``.
    """
    t = np.asarray(knots, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = t.size - degree - 1
    span = find_span(t, degree, n, u)
    idx = (span - degree)[:, None, None] + np.arange(degree + 1)[None, :, None] + np.arange(degree + 2)[None, None, :]
    T = t[idx].reshape(-1, degree + 2)
    uu = np.repeat(u, degree + 1)
    vals = basis_local(T, degree, uu, deriv, right=t[n]).reshape(u.size, degree + 1)
    return span, vals


def eval_tp_surface(s, u, v, du=0, dv=0):
    """Evaluate a tensor-product surface; raises ``ValueError`` outside its domain."""
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    u, v = np.broadcast_arrays(u, v)
    shape = u.shape
    u, v = u.ravel(), v.ravel()
    (u0, u1), (v0, v1) = s.domain
    if np.any((u < u0) | (u > u1) | (v < v0) | (v > v1)) or not np.all(np.isfinite(u + v)):
        raise ValueError("parameter outside the surface domain")
    p, q = s.degree_u, s.degree_v
    iu, Bu = basis_funs(s.uknots, p, u, du)
    iv, Bv = basis_funs(s.vknots, q, v, dv)
    rows = (iu - p)[:, None] + np.arange(p + 1)
    cols = (iv - q)[:, None] + np.arange(q + 1)
    C = s.coefs[rows[:, :, None], cols[:, None, :]]
    if s.dim == 1:
        out = np.einsum("nk,nkl,nl->n", Bu, C, Bv)
        return float(out[0]) if scalar else out.reshape(shape)
    out = np.einsum("nk,nkld,nl->nd", Bu, C, Bv)
    return out[0] if scalar else out.reshape(shape + (s.dim,))


def tp_insert_knot(s, direction, a, times=1):
    """Insert ``a`` into the u (``direction=0``) or v knot vector ``times`` times."""
    for _ in range(times):
        s = _tp_insert_once(s, direction, a)
    return s


def _tp_insert_once(s, direction, a):
    if direction == 1:
        t = _transpose(s)
        return _transpose(_tp_insert_once(t, 0, a))
    t, p, c = s.uknots, s.degree_u, s.coefs
    n = c.shape[0]
    if not t[p] <= a < t[n]:
        raise ValueError("knot must lie inside the domain")
    k = int(np.searchsorted(t, a, side="right")) - 1
    newc = np.empty((n + 1,) + c.shape[1:])
    newc[:k - p + 1] = c[:k - p + 1]
    newc[k + 1:] = c[k:]
    for i in range(k - p + 1, k + 1):
        den = t[i + p] - t[i]
        alpha = (a - t[i]) / den if den > 0 else 0.0
        newc[i] = alpha * c[i] + (1.0 - alpha) * c[i - 1]
    newt = np.insert(t, k + 1, a)
    return TPSurface(newt, s.vknots, p, s.degree_v, newc)


def _transpose(s):
    c = np.swapaxes(s.coefs, 0, 1)
    return TPSurface(s.vknots, s.uknots, s.degree_v, s.degree_u, c)


def tp_split(s, direction, a):
    """Split a surface at parameter ``a`` into two clamped surfaces (low, high)."""
    if direction == 1:
        lo, hi = tp_split(_transpose(s), 0, a)
        return _transpose(lo), _transpose(hi)
    p = s.degree_u
    t = s.uknots
    have = int(np.sum(t == a))
    s = tp_insert_knot(s, 0, a, max(p + 1 - have, 0))
    t = s.uknots
    first = int(np.searchsorted(t, a, side="left"))
    # knots equal to a occupy t[first:first+p+1]
    lo = TPSurface(t[:first + p + 1], s.vknots, p, s.degree_v, s.coefs[:first])
    hi = TPSurface(t[first:], s.vknots, p, s.degree_v, s.coefs[first:])
    return lo, hi


def _mirror(s):
    return TPSurface(-s.uknots[::-1], s.vknots, s.degree_u, s.degree_v, s.coefs[::-1])


def _clamp_left(s):
    p, t = s.degree_u, s.uknots
    a = t[p]
    s = tp_insert_knot(s, 0, a, p + 1 - int(np.sum(t == a)))
    t = s.uknots
    first = int(np.searchsorted(t, a, side="left"))
    return TPSurface(t[first:], s.vknots, p, s.degree_v, s.coefs[first:])


def tp_clamp(s):
    """Same surface on its domain with end knots of full multiplicity."""
    for _ in range(2):
        s = _mirror(_clamp_left(_mirror(_clamp_left(s))))
        s = _transpose(s)
    return s


def tp_restrict(s, urange, vrange):
    """Sub-surface on ``urange x vrange`` obtained by knot insertion."""
    s = tp_clamp(s)
    (u0, u1), (v0, v1) = s.domain
    if urange[0] > u0:
        s = tp_split(s, 0, urange[0])[1]
    if urange[1] < u1:
        s = tp_split(s, 0, urange[1])[0]
    if vrange[0] > v0:
        s = tp_split(s, 1, vrange[0])[1]
    if vrange[1] < v1:
        s = tp_split(s, 1, vrange[1])[0]
    return s


def tp_derivative(s, direction):
    """Partial derivative surface (degree lowered by one in ``direction``)."""
    if direction == 1:
        return _transpose(tp_derivative(_transpose(s), 0))
    p, t, c = s.degree_u, s.uknots, s.coefs
    if p == 0:
        raise ValueError("cannot differentiate a piecewise constant direction")
    den = (t[p + 1:-1] - t[1:-p - 1])
    den = den.reshape((-1,) + (1,) * (c.ndim - 1))
    dc = np.zeros((c.shape[0] - 1,) + c.shape[1:])
    np.divide(p * (c[1:] - c[:-1]), den, out=dc, where=den != 0)
    return TPSurface(t[1:-1], s.vknots, p - 1, s.degree_v, dc)


def greville_abscissae(knots, degree):
    """Greville abscissae of all B-splines of a global knot vector."""
    t = np.asarray(knots, dtype=float)
    n = t.size - degree - 1
    if degree == 0:
        return 0.5 * (t[:-1] + t[1:])
    return np.array([t[i + 1:i + degree + 1].mean() for i in range(n)])


def uniform_knots(a, b, n_coefs, degree):
    """Clamped uniform knot vector on ``[a, b]`` with ``n_coefs`` B-splines."""
    if n_coefs < degree + 1:
        raise ValueError("need at least degree + 1 coefficients")
    inner = np.linspace(a, b, n_coefs - degree + 1)
    return np.concatenate([np.full(degree, float(a)), inner, np.full(degree, float(b))])


def _design(knots, degree, x, deriv):
    n = knots.size - degree - 1
    span, vals = basis_funs(knots, degree, x, deriv)
    M = np.zeros((x.size, n))
    cols = (span - degree)[:, None] + np.arange(degree + 1)
    np.put_along_axis(M, cols, vals, axis=1)
    return M


def tp_grid(s, u, v, du=0, dv=0):
    """
    Scalar surface (or derivative) on the grid ``u x v``.

    Returns an array of shape ``(len(u), len(v))``.
    """
    if s.dim != 1:
        raise ValueError("grid evaluation needs a scalar surface")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    (u0, u1), (v0, v1) = s.domain
    if u.min() < u0 or u.max() > u1 or v.min() < v0 or v.max() > v1:
        raise ValueError("grid outside the surface domain")
    if du > s.degree_u or dv > s.degree_v:
        return np.zeros((u.size, v.size))
    return _design(s.uknots, s.degree_u, u, du) @ s.coefs @ _design(s.vknots, s.degree_v, v, dv).T
