"""
Coefficient solvers on a fixed spline space: smoothness-regularised least
squares and multilevel B-spline approximation (MBA) updates.
"""

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, minres

from .data import as_cloud

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """The linear system could not be solved to the required accuracy."""


# half-circle integrals of squared second and third directional derivatives,
# as symmetric bilinear forms over (Fxx, Fxy, Fyy) and (Fxxx, Fxxy, Fxyy, Fyyy)
_J2 = np.pi / 8 * np.array([[3.0, 0.0, 1.0],
                            [0.0, 4.0, 0.0],
                            [1.0, 0.0, 3.0]])
_J3 = np.pi / 16 * np.array([[5.0, 0.0, 3.0, 0.0],
                             [0.0, 9.0, 0.0, 3.0],
                             [3.0, 0.0, 9.0, 0.0],
                             [0.0, 3.0, 0.0, 5.0]])


def gauss_points(surf, order=None):
    """Gauss-Legendre nodes and weights over all elements of ``surf``."""
    if order is None:
        order = max(surf.degrees) + 1
    t, w = np.polynomial.legendre.leggauss(order)
    box = surf.element_boxes()
    cu = 0.5 * (box[:, 0] + box[:, 1])
    hu = 0.5 * (box[:, 1] - box[:, 0])
    cv = 0.5 * (box[:, 2] + box[:, 3])
    hv = 0.5 * (box[:, 3] - box[:, 2])
    tu, tv = np.meshgrid(t, t, indexing="ij")
    ww = np.outer(w, w).ravel()
    u = (cu[:, None] + hu[:, None] * tu.ravel()).ravel()
    v = (cv[:, None] + hv[:, None] * tv.ravel()).ravel()
    wt = ((hu * hv)[:, None] * ww).ravel()
    return u, v, wt


def smoothness_matrix(surf, w2=0.5, w3=0.5):
    """
    Matrix ``M`` with ``c^T M c = J(F)``.

    ``J`` integrates over the domain the squared second (weight ``w2``) and
    third (weight ``w3``) directional derivatives, summed over the directions
    ``theta`` in ``[0, pi)``; the direction integral is taken in closed form.
    """
    u, v, wt = gauss_points(surf)
    W = sp.diags(wt)
    n = surf.num_coefs
    M = sp.csr_matrix((n, n))
    for w, orders, form in ((w2, [(2, 0), (1, 1), (0, 2)], _J2),
                            (w3, [(3, 0), (2, 1), (1, 2), (0, 3)], _J3)):
        if w == 0:
            continue
        D = [surf.basis_matrix(u, v, a, b) for a, b in orders]
        WD = [W @ d for d in D]
        for i in range(len(D)):
            for j in range(len(D)):
                if form[i, j] != 0:
                    M = M + (w * form[i, j]) * (D[i].T @ WD[j])
    return M.tocsr()


def point_weights(cloud, significant_weight=1.0):
    w = cloud.weight.copy()
    w[cloud.significant] *= significant_weight
    return w


def normal_equations(surf, cloud, alpha1=1e-9, w2=0.5, w3=0.5, weights=None):
    """
    Assemble ``(N, rhs)`` for ``alpha1 * J + (1 - alpha1) * sum w (F - z)^2``.
    """
    cloud = as_cloud(cloud)
    w = cloud.weight if weights is None else np.asarray(weights, dtype=float)
    A = surf.basis_matrix(cloud.x, cloud.y)
    alpha2 = 1.0 - alpha1
    AtW = A.T @ sp.diags(w)
    N = alpha2 * (AtW @ A)
    if alpha1 > 0:
        N = N + alpha1 * smoothness_matrix(surf, w2, w3)
    rhs = alpha2 * (AtW @ cloud.z)
    return N.tocsr(), rhs


def solve_spd(N, rhs, x0=None, rtol=1e-10):
    """
    Preconditioned conjugate gradients with a MINRES fallback.

    Raises :class:`FitError` when neither reaches ``rtol`` (nor a relaxed
    ``1e-6``) in relative residual.
    """
    n = N.shape[0]
    d = N.diagonal()
    inv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    P = LinearOperator((n, n), matvec=lambda x: inv * x, dtype=float)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros(n)
    x, info = cg(N, rhs, x0=x0, rtol=rtol, atol=0.0, maxiter=10 * n, M=P)
    rel = np.linalg.norm(N @ x - rhs) / bnorm
    if info == 0 and rel <= 10 * rtol:
        return x
    log.info("CG stopped at relative residual %.3g (info %d); trying MINRES", rel, info)
    y, info2 = minres(N, rhs, x0=x, rtol=rtol, maxiter=20 * n, M=P)
    rel2 = np.linalg.norm(N @ y - rhs) / bnorm
    if rel2 < rel:
        x, rel = y, rel2
    if rel > 1e-6:
        raise FitError(f"linear solve did not converge: relative residual {rel:.3e} "
                       f"(cg info {info}, minres info {info2}, {n} unknowns)")
    return x


def least_squares_fit(surf, cloud, config=None, alpha1=None, weights=None):
    """
    Smoothness-regularised weighted least squares on the space of ``surf``.

    Parameters
    ----------
    surf : LRSurface
        Defines the space; its coefficients are the CG starting guess.
    cloud : PointCloud
    config : FitConfig, optional
        Supplies ``alpha1``, ``w2``, ``w3`` and the significant-point weight.
    alpha1 : float, optional
        Overrides the config value; ``0`` gives plain least squares.
    weights : array_like, optional
        Per-point weights overriding those derived from the cloud.
    """
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    a1 = config.alpha1 if alpha1 is None and config is not None else (1e-9 if alpha1 is None else alpha1)
    if not 0 <= a1 < 1:
        raise ValueError("alpha1 must lie in [0, 1)")
    w2 = config.w2 if config is not None else 0.5
    w3 = config.w3 if config is not None else 0.5
    if weights is None:
        weights = point_weights(cloud, config.significant_weight if config is not None else 1.0)
    N, rhs = normal_equations(surf, cloud, a1, w2, w3, weights)
    x = solve_spd(N, rhs, x0=np.asarray(surf.coefs, dtype=float))
    return surf.with_coefficients(x)


def mba_coefficients(A, r, weights=None):
    """
    Residual-surface coefficients from one MBA step.

    ``A`` is the basis matrix at the points and ``r`` the residuals.  Each
    point proposes ``phi = N_B r / sum N^2`` to every B-spline it touches;
    each B-spline averages the proposals with weights ``w N_B^2``.
    """
    A = sp.csr_matrix(A)
    w = np.ones(A.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    A2 = A.multiply(A).tocsr()
    s = np.asarray(A2.sum(axis=1)).ravel()
    f = np.divide(w * r, s, out=np.zeros_like(s), where=s > 0)
    num = A2.multiply(A).T @ f
    den = A2.T @ w
    return np.divide(num, den, out=np.zeros_like(den), where=den > 0)


def mba_update(surf, cloud, weights=None, passes=1, A=None):
    """
    Add ``passes`` MBA residual surfaces to ``surf`` (space unchanged).

    Parameters
    ----------
    weights : array_like, optional
        Point weights, default the cloud weights.
    A : sparse matrix, optional
        Precomputed basis matrix at the cloud points.
    """
    cloud = as_cloud(cloud)
    if A is None:
        A = surf.basis_matrix(cloud.x, cloud.y)
    w = cloud.weight if weights is None else weights
    c = np.asarray(surf.coefs, dtype=float).copy()
    z = cloud.z
    for _ in range(passes):
        c = c + mba_coefficients(A, z - A @ c, w)
    return surf.with_coefficients(c)
