"""Fast pointwise evaluation of a scalar tensor-product patch and its derivatives."""

from bisect import bisect_right

import numpy as np

from ..bspline import TPSurface


def _span(t, p, n, x):
    i = bisect_right(t, x) - 1
    if i > n - 1:
        i = n - 1
    if i < p:
        i = p
    while i > p and t[i] == t[i + 1]:
        i -= 1
    return i


def ders_basis(t, p, i, x, nd):
    """Values and derivatives up to ``nd`` of the ``p + 1`` B-splines active on span ``i``."""
    ndu = [[0.0] * (p + 1) for _ in range(p + 1)]
    ndu[0][0] = 1.0
    left = [0.0] * (p + 1)
    right = [0.0] * (p + 1)
    for j in range(1, p + 1):
        left[j] = x - t[i + 1 - j]
        right[j] = t[i + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j][r] = right[r + 1] + left[j - r]
            tmp = ndu[r][j - 1] / ndu[j][r]
            ndu[r][j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j][j] = saved
    out = np.zeros((nd + 1, p + 1))
    for j in range(p + 1):
        out[0, j] = ndu[j][p]
    top = min(nd, p)
    a = [[0.0] * (p + 1) for _ in range(2)]
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0][0] = 1.0
        for k in range(1, top + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk]
                d = a[s2][0] * ndu[rk][pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j]
                d += a[s2][j] * ndu[rk + j][pk]
            if r <= pk:
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r]
                d += a[s2][k] * ndu[r][pk]
            out[k, r] = d
            s1, s2 = s2, s1
    f = p
    for k in range(1, top + 1):
        out[k] *= f
        f *= p - k
    return out


class Patch:
    """
    Scalar tensor-product patch evaluated one point at a time.

    ``derivs(u, v, n)[i, j]`` is the mixed partial ``d^(i+j) F / du^i dv^j``.
    """

    def __init__(self, tp):
        if not isinstance(tp, TPSurface) or tp.dim != 1:
            raise TypeError("expected a scalar TPSurface")
        self.tp = tp
        self.p, self.q = tp.degree_u, tp.degree_v
        self.U = [float(x) for x in tp.uknots]
        self.V = [float(x) for x in tp.vknots]
        self.C = np.asarray(tp.coefs, dtype=float)
        self.n1, self.n2 = self.C.shape
        (self.u0, self.u1), (self.v0, self.v1) = tp.domain
        self.ubreaks = np.unique(tp.uknots)
        self.vbreaks = np.unique(tp.vknots)

    @property
    def rect(self):
        return (self.u0, self.u1), (self.v0, self.v1)

    def derivs(self, u, v, n=2):
        i = _span(self.U, self.p, self.n1, u)
        j = _span(self.V, self.q, self.n2, v)
        Du = ders_basis(self.U, self.p, i, u, n)
        Dv = ders_basis(self.V, self.q, j, v, n)
        block = self.C[i - self.p:i + 1, j - self.q:j + 1]
        return Du @ block @ Dv.T

    def value(self, u, v):
        return float(self.derivs(u, v, 0)[0, 0])

    def cell_diameter(self, u, v):
        """Diagonal of the knot cell containing ``(u, v)``."""
        a = min(max(np.searchsorted(self.ubreaks, u, side="right") - 1, 0), self.ubreaks.size - 2)
        b = min(max(np.searchsorted(self.vbreaks, v, side="right") - 1, 0), self.vbreaks.size - 2)
        return float(np.hypot(self.ubreaks[a + 1] - self.ubreaks[a], self.vbreaks[b + 1] - self.vbreaks[b]))
