# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-polygon kernels: VEM element stiffness and cyclic Jacobi
eigenvalues. Mirrors cutvem._kernels_py; keep both in sync."""

from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

import numpy as np

from .errors import SingularG

DEF ZERO_EIG_REL = 1e-10
DEF JACOBI_TOL_REL = 1e-14
DEF MAX_SWEEPS = 64


cdef int _build_stiffness(const double* v, int n, double kappa, double tau,
                          double* K) except -1:
    # v is interleaved (x0, y0, x1, y1, ...). Scratch layout:
    # D: n x 3, B: 3 x n, P = Pi_star: 3 x n, Pi: n x n.
    cdef double* buf = <double*> malloc((9 * n + n * n) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* D = buf
    cdef double* B = buf + 3 * n
    cdef double* P = buf + 6 * n
    cdef double* Pi = buf + 9 * n
    cdef int i, j, r, s, ip, im
    cdef double xc = 0.0, yc = 0.0, h2 = 0.0, d2, h
    cdef double G[3][3]
    cdef double Gi[3][3]
    cdef double det, t1, t2

    try:
        for i in range(n):
            xc += v[2 * i]
            yc += v[2 * i + 1]
        xc /= n
        yc /= n
        for i in range(n):
            for j in range(i + 1, n):
                d2 = (v[2 * i] - v[2 * j]) * (v[2 * i] - v[2 * j]) + \
                     (v[2 * i + 1] - v[2 * j + 1]) * (v[2 * i + 1] - v[2 * j + 1])
                if d2 > h2:
                    h2 = d2
        h = sqrt(h2)
        if h == 0.0:
            raise SingularG("degenerate polygon: zero diameter")

        for i in range(n):
            D[3 * i] = 1.0
            D[3 * i + 1] = (v[2 * i] - xc) / h
            D[3 * i + 2] = (v[2 * i + 1] - yc) / h
            ip = i + 1 if i + 1 < n else 0
            im = i - 1 if i > 0 else n - 1
            B[i] = 1.0 / n
            B[n + i] = 0.5 * (v[2 * ip + 1] - v[2 * im + 1]) / h
            B[2 * n + i] = 0.5 * (v[2 * im] - v[2 * ip]) / h

        for r in range(3):
            for s in range(3):
                t1 = 0.0
                for i in range(n):
                    t1 += B[r * n + i] * D[3 * i + s]
                G[r][s] = t1

        det = (G[0][0] * (G[1][1] * G[2][2] - G[1][2] * G[2][1])
               - G[0][1] * (G[1][0] * G[2][2] - G[1][2] * G[2][0])
               + G[0][2] * (G[1][0] * G[2][1] - G[1][1] * G[2][0]))
        if det == 0.0:
            raise SingularG("projector Gram matrix is singular")
        Gi[0][0] = (G[1][1] * G[2][2] - G[1][2] * G[2][1]) / det
        Gi[0][1] = (G[0][2] * G[2][1] - G[0][1] * G[2][2]) / det
        Gi[0][2] = (G[0][1] * G[1][2] - G[0][2] * G[1][1]) / det
        Gi[1][0] = (G[1][2] * G[2][0] - G[1][0] * G[2][2]) / det
        Gi[1][1] = (G[0][0] * G[2][2] - G[0][2] * G[2][0]) / det
        Gi[1][2] = (G[0][2] * G[1][0] - G[0][0] * G[1][2]) / det
        Gi[2][0] = (G[1][0] * G[2][1] - G[1][1] * G[2][0]) / det
        Gi[2][1] = (G[0][1] * G[2][0] - G[0][0] * G[2][1]) / det
        Gi[2][2] = (G[0][0] * G[1][1] - G[0][1] * G[1][0]) / det

        # Pi_star = G^-1 B ;  Pi = D Pi_star
        for r in range(3):
            for i in range(n):
                P[r * n + i] = (Gi[r][0] * B[i] + Gi[r][1] * B[n + i]
                                + Gi[r][2] * B[2 * n + i])
        for i in range(n):
            for j in range(n):
                Pi[i * n + j] = (D[3 * i] * P[j] + D[3 * i + 1] * P[n + j]
                                 + D[3 * i + 2] * P[2 * n + j])

        # K = kappa * Pi_star^T Gt Pi_star + tau * (I - Pi)^T (I - Pi)
        # with Gt = G but first row zeroed.
        for i in range(n):
            for j in range(n):
                t1 = 0.0
                for r in range(1, 3):
                    for s in range(3):
                        t1 += P[r * n + i] * G[r][s] * P[s * n + j]
                t2 = 0.0
                for r in range(n):
                    t2 += ((1.0 if r == i else 0.0) - Pi[r * n + i]) * \
                          ((1.0 if r == j else 0.0) - Pi[r * n + j])
                K[i * n + j] = kappa * t1 + tau * t2
        return 0
    finally:
        free(buf)


cdef void _jacobi(double* a, int n, double tol):
    cdef int sweep, p, q, i
    cdef double apq, theta, t, c, s, off, rp, rq
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                if fabs(a[p * n + q]) > off:
                    off = fabs(a[p * n + q])
        if off <= tol:
            return
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if fabs(apq) <= tol:
                    continue
                theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for i in range(n):
                    rp = a[p * n + i]
                    rq = a[q * n + i]
                    a[p * n + i] = c * rp - s * rq
                    a[q * n + i] = s * rp + c * rq
                for i in range(n):
                    rp = a[i * n + p]
                    rq = a[i * n + q]
                    a[i * n + p] = c * rp - s * rq
                    a[i * n + q] = s * rp + c * rq


cdef double _fro(const double* a, int n):
    cdef double f = 0.0
    cdef int i
    for i in range(n * n):
        f += a[i] * a[i]
    return sqrt(f)


def vem_stiffness(coords, double kappa, double tau):
    """First-order VEM element stiffness (consistency + dofi-dofi term)."""
    cdef double[:, ::1] v = np.ascontiguousarray(coords, dtype=np.float64)
    cdef int n = v.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] K = out
    _build_stiffness(&v[0, 0], n, kappa, tau, &K[0, 0])
    return out


def sym_eigvals(a):
    """Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi."""
    arr = np.array(a, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] m = arr
    cdef int n = m.shape[0]
    if n == 1:
        return np.array([arr[0, 0]])
    _jacobi(&m[0, 0], n, JACOBI_TOL_REL * _fro(&m[0, 0], n))
    return np.sort(np.diagonal(arr).copy())


cdef void _deflate_constant(const double* K, int n, double* Kd):
    # Householder similarity sending the constant vector to axis 0,
    # then drop row/col 0. w = ones/sqrt(n) - e0.
    cdef double inv = 1.0 / sqrt(<double> n)
    cdef double c = 2.0 - 2.0 * inv
    cdef int i, j
    cdef double alpha = 0.0, wi, wj, ui, uj
    # u = K w
    cdef double* u = <double*> malloc(n * sizeof(double))
    if u == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            ui = 0.0
            for j in range(n):
                wj = inv - 1.0 if j == 0 else inv
                ui += K[i * n + j] * wj
            u[i] = ui
            wi = inv - 1.0 if i == 0 else inv
            alpha += wi * ui
        for i in range(1, n):
            wi = inv
            for j in range(1, n):
                wj = inv
                Kd[(i - 1) * (n - 1) + (j - 1)] = (
                    K[i * n + j]
                    - (2.0 / c) * (wi * u[j] + u[i] * wj)
                    + (4.0 * alpha / (c * c)) * wi * wj)
    finally:
        free(u)


def stability_sigma(coords, double kappa, double tau):
    """(sigma, psd_violations) for the element on `coords`; the constant
    null mode is deflated exactly; see _kernels_py.stability_sigma."""
    cdef double[:, ::1] v = np.ascontiguousarray(coords, dtype=np.float64)
    cdef int n = v.shape[0]
    cdef int m = n - 1
    cdef double* K = <double*> malloc((n * n + m * m) * sizeof(double))
    if K == NULL:
        raise MemoryError()
    cdef double* Kd = K + n * n
    cdef int i, nviol = 0
    cdef double lam_max, lam_min
    try:
        _build_stiffness(&v[0, 0], n, kappa, tau, K)
        _deflate_constant(K, n, Kd)
        _jacobi(Kd, m, JACOBI_TOL_REL * _fro(Kd, m))
        lam_max = Kd[0]
        lam_min = Kd[0]
        for i in range(1, m):
            if Kd[i * m + i] > lam_max:
                lam_max = Kd[i * m + i]
            if Kd[i * m + i] < lam_min:
                lam_min = Kd[i * m + i]
        if lam_max <= 0.0:
            return 0.0, m
        for i in range(m):
            if Kd[i * m + i] < -ZERO_EIG_REL * lam_max:
                nviol += 1
        if lam_min < 0.0:
            lam_min = 0.0
        return lam_min / lam_max, nviol
    finally:
        free(K)
