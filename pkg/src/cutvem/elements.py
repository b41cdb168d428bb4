"""Per-polygon element matrices: first-order VEM, P1/Q1 FEM baselines,
stability ratio and the area/perimeter shape quality.

The VEM element stiffness splits into a consistency part, exact on affine
functions, and a dofi-dofi stabilization scaled by tau:

    K = kappa * Pi_star^T Gt Pi_star + tau * (I - Pi)^T (I - Pi)

On triangles Pi is the identity, the stabilization vanishes, and K equals
the analytic P1 finite element matrix for every tau.

Two deliberate corrections relative to the usual displayed formulas are
baked in (both are exercised by regression tests): the second component of
the boundary vectors a_i is x_{i-1} - x_{i+1} (outward normals of a CCW
polygon), and the load vector carries a 1/N factor so that summing it over
a mesh reproduces the integral of the source.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels_py import vem_projectors
from .errors import FemOnPolygon, NegativeJacobian, UnexpectedNullSpace
from .mesh import signed_area

#: eigenvalues below this times lambda_max count as the element null mode
ZERO_EIG_REL = 1e-10


@dataclass
class ElementMatrices:
    """The D/B/G projection bundle and stiffness split for one polygon."""
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    G_tilde: np.ndarray
    Pi_star: np.ndarray
    Pi: np.ndarray
    K_consis: np.ndarray
    K_stab: np.ndarray
    K: np.ndarray
    diameter: float
    f: np.ndarray | None = None


@dataclass
class MaterialSpec:
    """Conductivity per subdomain and the stabilization multiplier.

    `kappa` is either a single positive scalar (applies to every domain id)
    or a mapping {domain_id: kappa}. The effective stabilization parameter
    of a face is tau_multiplier * kappa(domain id of the face).
    """
    kappa: float | dict = 1.0
    tau_multiplier: float = 1.0

    def __post_init__(self):
        values = (self.kappa.values() if isinstance(self.kappa, dict)
                  else [self.kappa])
        if any(k <= 0 for k in values):
            raise ValueError("conductivities must be positive")
        if self.tau_multiplier <= 0:
            raise ValueError("tau_multiplier must be positive")

    def kappa_of(self, domain_id):
        if isinstance(self.kappa, dict):
            return float(self.kappa[domain_id])
        return float(self.kappa)

    def tau_of(self, domain_id):
        return self.tau_multiplier * self.kappa_of(domain_id)


def vem_matrices(coords, kappa=1.0, tau=None):
    """Full VEM matrix bundle for one CCW simple polygon.

    tau defaults to kappa (the stabilization choice used throughout the
    experiments). The hot paths use cutvem.kernels instead; this builder is
    for assembly, diagnostics and tests.
    """
    if tau is None:
        tau = kappa
    D, B, G, Pi_star, Pi, h = vem_projectors(coords)
    Gt = G.copy()
    Gt[0, :] = 0.0
    K_consis = kappa * (Pi_star.T @ Gt @ Pi_star)
    r = np.eye(len(D)) - Pi
    K_stab = tau * (r.T @ r)
    return ElementMatrices(D=D, B=B, G=G, G_tilde=Gt, Pi_star=Pi_star, Pi=Pi,
                           K_consis=K_consis, K_stab=K_stab,
                           K=K_consis + K_stab, diameter=h)


def vem_load(coords, f):
    """Element load vector: |E| * f(centroid) / N per entry."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    xc = coords.mean(axis=0)
    area = abs(float(signed_area(coords)))
    return np.full(n, area * float(f(xc[0], xc[1])) / n)


def fem_stiffness(coords, kappa=1.0):
    """Isoparametric FEM stiffness: analytic P1 (triangle) or Q1 with
    2x2 Gauss quadrature (quadrilateral)."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if n == 3:
        x, y = coords[:, 0], coords[:, 1]
        b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
        c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
        area = float(signed_area(coords))
        if area <= 0:
            raise NegativeJacobian("triangle is degenerate or CW")
        return kappa * (np.outer(b, b) + np.outer(c, c)) / (4.0 * area)
    if n == 4:
        g = 1.0 / np.sqrt(3.0)
        xi_n = np.array([-1.0, 1.0, 1.0, -1.0])
        eta_n = np.array([-1.0, -1.0, 1.0, 1.0])
        K = np.zeros((4, 4))
        for xi in (-g, g):
            for eta in (-g, g):
                dN = np.column_stack([0.25 * xi_n * (1.0 + eta * eta_n),
                                      0.25 * eta_n * (1.0 + xi * xi_n)])
                J = dN.T @ coords  # rows: d(x,y)/dxi, d(x,y)/deta
                detJ = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                if detJ <= 0:
                    raise NegativeJacobian(f"quad Jacobian {detJ} at gauss point")
                grads = dN @ np.linalg.inv(J).T
                K += kappa * detJ * (grads @ grads.T)
        return K
    raise FemOnPolygon(f"FEM supports 3 or 4 vertices, got {n}")


def stability_ratio(K):
    """lambda_min / lambda_max over the positive spectrum of a PSD element
    stiffness whose null space is the constant vector.

    The constant mode is deflated exactly (Householder similarity) rather
    than thresholded away, so ratios many orders of magnitude below the
    eigenvalue round-off floor of lambda_max remain meaningful on collapsing
    slivers. Eigenvalues below -1e-10 * lambda_max after deflation signal a
    nonpositive stabilization or a broken element.
    """
    from ._kernels_py import deflate_constant_mode
    eig = kernels.sym_eigvals(deflate_constant_mode(np.asarray(K, dtype=float)))
    lam_max = float(eig[-1])
    if lam_max <= 0.0:
        raise UnexpectedNullSpace("element stiffness has no positive spectrum")
    if eig[0] < -ZERO_EIG_REL * lam_max:
        raise UnexpectedNullSpace(
            f"negative eigenvalue {eig[0]:.3e} beyond the constant mode")
    return max(float(eig[0]), 0.0) / lam_max


def stability_ratio_coords(coords, kappa=1.0, tau=None):
    """Stability ratio straight from polygon coordinates (hot path)."""
    if tau is None:
        tau = kappa
    sigma, nviol = kernels.stability_sigma(
        np.ascontiguousarray(coords, dtype=np.float64), kappa, tau)
    if nviol > 0:
        raise UnexpectedNullSpace(
            f"{nviol} negative eigenvalues beyond the constant mode")
    return sigma


def quality_metric(coords):
    """Normalized area to squared-perimeter ratio, 1 for regular n-gons."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    area = abs(float(signed_area(coords)))
    per = float(np.sum(np.hypot(*(np.roll(coords, -1, axis=0) - coords).T)))
    if per == 0.0 or area == 0.0:
        return 0.0
    return 4.0 * n * np.tan(np.pi / n) * area / per ** 2
