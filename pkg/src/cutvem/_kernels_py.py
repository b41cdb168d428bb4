"""Pure-Python (numpy) implementation of the hot per-polygon kernels.

This module mirrors the compiled extension `cutvem._kernels` and is selected
at import time by `cutvem.kernels` when the extension is unavailable (or when
CUTVEM_PURE_PYTHON is set). Keep the two implementations in sync; the test
suite asserts they agree to near round-off.

Conventions
-----------
Polygons are (n, 2) float arrays of CCW vertex coordinates with n >= 3.
The scaled monomial basis is {1, (x - xc)/h, (y - yc)/h} where xc is the
arithmetic mean of the vertices and h the maximum pairwise vertex distance.
The boundary-integral vectors use the outward-normal form

    a_i = 1/2 * (y_{i+1} - y_{i-1},  x_{i-1} - x_{i+1})

(cyclic indexing). Note the second component: for CCW polygons the average
of the two adjacent scaled edge normals has x_{i-1} - x_{i+1}, which is what
makes the projector Gram identity G = B.D hold.
"""

import numpy as np

from .errors import SingularG

#: element eigenvalues below ZERO_EIG_REL * lambda_max count as the null mode
ZERO_EIG_REL = 1e-10

#: cyclic Jacobi stops when every off-diagonal entry is below this times ||A||_F
JACOBI_TOL_REL = 1e-14

_MAX_SWEEPS = 64


def poly_diameter(coords):
    """Maximum pairwise vertex distance."""
    d = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((d * d).sum(axis=2).max())


def vem_projectors(coords):
    """Return (D, B, G, Pi_star, Pi, h) for one polygon.

    D is n x 3 (scaled monomials at the vertices), B is 3 x n, G = B.D,
    Pi_star = G^{-1} B is the projector in the monomial basis and
    Pi = D Pi_star the projector acting on vertex values.
    """
    v = np.asarray(coords, dtype=float)
    n = v.shape[0]
    xc = v.mean(axis=0)
    h = poly_diameter(v)
    dm = (v - xc) / h
    D = np.column_stack([np.ones(n), dm[:, 0], dm[:, 1]])
    nxt = np.roll(v, -1, axis=0)
    prv = np.roll(v, 1, axis=0)
    B = np.vstack([
        np.full(n, 1.0 / n),
        0.5 * (nxt[:, 1] - prv[:, 1]) / h,
        0.5 * (prv[:, 0] - nxt[:, 0]) / h,
    ])
    G = B @ D
    try:
        Pi_star = np.linalg.solve(G, B)
    except np.linalg.LinAlgError as exc:
        raise SingularG(str(exc)) from None
    Pi = D @ Pi_star
    return D, B, G, Pi_star, Pi, h


def vem_stiffness(coords, kappa, tau):
    """First-order VEM element stiffness (consistency + dofi-dofi term)."""
    D, B, G, Pi_star, Pi, _ = vem_projectors(coords)
    Gt = G.copy()
    Gt[0, :] = 0.0
    r = np.eye(len(D)) - Pi
    return kappa * (Pi_star.T @ Gt @ Pi_star) + tau * (r.T @ r)


def sym_eigvals(a):
    """Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    tol = JACOBI_TOL_REL * np.linalg.norm(a)
    for _ in range(_MAX_SWEEPS):
        off = a - np.diag(np.diag(a))
        if np.abs(off).max() <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return np.sort(np.diag(a))


def deflate_constant_mode(K):
    """Project out the constant eigenvector by a Householder similarity.

    The element null space is the constant vector exactly, so removing it
    this way (rather than by an eigenvalue threshold) keeps the ratio
    meaningful for near-degenerate slivers whose smallest positive
    eigenvalue sinks many orders of magnitude below lambda_max.
    Returns the (n-1) x (n-1) restriction to the complement.
    """
    n = K.shape[0]
    w = np.full(n, 1.0 / np.sqrt(n))
    w[0] -= 1.0
    c = float(w @ w)
    u = K @ w
    alpha = float(w @ u)
    P = (K - (2.0 / c) * (np.outer(w, u) + np.outer(u, w))
         + (4.0 * alpha / c ** 2) * np.outer(w, w))
    return P[1:, 1:]


def stability_sigma(coords, kappa, tau):
    """Stability ratio of the element on `coords`.

    Returns (sigma, psd_violations): sigma is lambda_min / lambda_max over
    the spectrum restricted to the complement of the constant mode (clamped
    at zero when round-off drives the minimum slightly negative), and
    psd_violations counts eigenvalues below -ZERO_EIG_REL * lambda_max,
    which signal a nonpositive stabilization or a broken element.
    """
    eig = sym_eigvals(deflate_constant_mode(vem_stiffness(coords, kappa, tau)))
    lam_max = float(eig[-1])
    if lam_max <= 0.0:
        return 0.0, len(eig)
    nviol = int(np.sum(eig < -ZERO_EIG_REL * lam_max))
    return max(float(eig[0]), 0.0) / lam_max, nviol
