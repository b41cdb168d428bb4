"""Sparse symmetric storage, deterministic assembly, a Jacobi-preconditioned
conjugate gradient solver and extreme-eigenvalue computation.

Assembly sums the contributions to each matrix entry in a canonical order
(ascending value), so permuting the element list produces a bitwise
identical matrix. Desk-scale spectra use a dense symmetric eigensolver;
beyond `dense_cutoff` unknowns, the largest eigenvalue comes from power
iteration and the smallest nonzero one from inverse iteration deflated
against the known null vector, both verified through an eigen-residual
bound (for symmetric matrices the Rayleigh quotient is within the residual
norm of a true eigenvalue).
"""

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, NotConverged, NotSPD, TooManyNullModes

ZERO_EIG_REL = 1e-10
DENSE_CUTOFF = 3000


class SparseSymMatrix:
    """CSR storage of a symmetric matrix with both triangles kept."""

    def __init__(self, n, indptr, indices, values):
        self.n = n
        self.indptr = indptr
        self.indices = indices
        self.values = values

    def matvec(self, x):
        y = self.values * x[self.indices]
        return np.add.reduceat(y, self.indptr[:-1])

    def diagonal(self):
        d = np.zeros(self.n)
        for i in range(self.n):
            row = slice(self.indptr[i], self.indptr[i + 1])
            cols = self.indices[row]
            hit = np.flatnonzero(cols == i)
            if hit.size:
                d[i] = self.values[row][hit[0]]
        return d

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        for i in range(self.n):
            row = slice(self.indptr[i], self.indptr[i + 1])
            a[i, self.indices[row]] = self.values[row]
        return a

    def submatrix(self, keep):
        """Rows/columns restricted to the index array `keep`."""
        keep = np.asarray(keep, dtype=int)
        inv = np.full(self.n, -1, dtype=int)
        inv[keep] = np.arange(len(keep))
        entries = {}
        for new_i, i in enumerate(keep):
            for k in range(self.indptr[i], self.indptr[i + 1]):
                j = inv[self.indices[k]]
                if j >= 0:
                    entries[(new_i, j)] = entries.get((new_i, j), 0.0) + self.values[k]
        return from_entries(len(keep), entries)

    def dump_coordinate(self, path):
        """Write (row, col, value) triplets for external verification."""
        with open(path, "w") as fh:
            for i in range(self.n):
                for k in range(self.indptr[i], self.indptr[i + 1]):
                    fh.write(f"{i} {self.indices[k]} {self.values[k]:.17g}\n")


def from_entries(n, entries):
    """Build CSR from a {(i, j): value} mapping, columns sorted per row."""
    rows = [[] for _ in range(n)]
    for (i, j), v in entries.items():
        rows[i].append((j, v))
    indptr = np.zeros(n + 1, dtype=int)
    indices = []
    values = []
    for i in range(n):
        rows[i].sort()
        indptr[i + 1] = indptr[i] + len(rows[i])
        indices.extend(j for j, _ in rows[i])
        values.extend(v for _, v in rows[i])
    return SparseSymMatrix(n, indptr, np.asarray(indices, dtype=int),
                           np.asarray(values, dtype=float))


def assemble(elements, n):
    """Assemble (stiffness, load) from per-element (dofs, K_e, f_e) triples.

    Contributions landing on the same global entry are summed in ascending
    value order, which makes the result independent of element ordering.
    f_e may be None for load-free elements.
    """
    acc = {}
    load = {}
    for dofs, K_e, f_e in elements:
        dofs = list(dofs)
        if any(not 0 <= g < n for g in dofs):
            raise IndexOutOfRange(f"dof map {dofs} outside [0, {n})")
        m = len(dofs)
        for a in range(m):
            ga = dofs[a]
            for b in range(m):
                acc.setdefault((ga, dofs[b]), []).append(float(K_e[a, b]))
            if f_e is not None:
                load.setdefault(ga, []).append(float(f_e[a]))
    entries = {key: _canonical_sum(vals) for key, vals in acc.items()}
    F = np.zeros(n)
    for g, vals in load.items():
        F[g] = _canonical_sum(vals)
    return from_entries(n, entries), F


def _canonical_sum(vals):
    vals.sort()
    s = 0.0
    for v in vals:
        s += v
    return s


@dataclass
class SolveResult:
    x: np.ndarray
    converged: bool
    iterations: int
    relative_residual: float


def dense_cholesky_solve(a, b):
    """Direct SPD solve; the oracle partner of solve_spd."""
    try:
        L = np.linalg.cholesky(np.asarray(a, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from None
    y = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, y)


def solve_spd(A, b, tol=1e-10, max_iter=None):
    """Jacobi-preconditioned CG, with a dense Cholesky fallback for
    small systems when CG stagnates. Returns a SolveResult; inspect
    `.converged` (no exception is raised here)."""
    n = A.n
    if max_iter is None:
        max_iter = 20 * n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return SolveResult(np.zeros(n), True, 0, 0.0)
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotSPD("nonpositive diagonal entry")
    x = np.zeros(n)
    r = b.copy()
    z = r / d
    p = z.copy()
    rz = float(r @ z)
    it = 0
    while it < max_iter:
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol * bnorm:
            return SolveResult(x, True, it, rnorm / bnorm)
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break  # not SPD or fully stagnated
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r / d
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    rnorm = float(np.linalg.norm(b - A.matvec(x)))
    if rnorm <= tol * bnorm:
        return SolveResult(x, True, it, rnorm / bnorm)
    if n <= DENSE_CUTOFF:
        try:
            xd = dense_cholesky_solve(A.to_dense(), b)
            rd = float(np.linalg.norm(b - A.matvec(xd)))
            if rd < rnorm:
                return SolveResult(xd, rd <= tol * bnorm * 10, it, rd / bnorm)
        except NotSPD:
            pass
    return SolveResult(x, False, it, rnorm / bnorm)


@dataclass
class SpectrumSummary:
    lam_min_nonzero: float
    lam_max: float
    condition: float
    null_dimension: int


def extreme_nonzero_eigs(A, known_null=None, dense_cutoff=DENSE_CUTOFF,
                         tol=1e-8):
    """Extreme eigenvalues of a symmetric PSD matrix, zero modes excluded.

    Expects at most one numerically zero eigenvalue when `known_null` is
    given and none otherwise; raises TooManyNullModes if more show up
    (a disconnected mesh, for assembled stiffness matrices).
    """
    if A.n <= dense_cutoff:
        w = np.linalg.eigvalsh(A.to_dense())
        lam_max = float(w[-1])
        thresh = ZERO_EIG_REL * lam_max
        nnull = int(np.sum(w <= thresh))
        expected = 1 if known_null is not None else 0
        if nnull > expected:
            raise TooManyNullModes(f"{nnull} numerically zero eigenvalues")
        lam_min = float(w[nnull])
        return SpectrumSummary(lam_min, lam_max, lam_max / lam_min, nnull)
    return _extreme_eigs_iterative(A, known_null, tol)


def _extreme_eigs_iterative(A, known_null, tol, max_outer=50000):
    n = A.n
    rng = np.random.default_rng(0x5EED)

    if known_null is not None:
        null = np.asarray(known_null, dtype=float)
        null = null / np.linalg.norm(null)
    else:
        null = None

    def deflate(v):
        return v - null * float(null @ v) if null is not None else v

    # largest eigenvalue: power iteration with eigen-residual stopping
    x = deflate(rng.standard_normal(n))
    x /= np.linalg.norm(x)
    lam_max = 0.0
    for _ in range(max_outer):
        y = A.matvec(x)
        lam_max = float(x @ y)
        if np.linalg.norm(y - lam_max * x) <= tol * abs(lam_max):
            break
        x = deflate(y)
        x /= np.linalg.norm(x)
    else:
        raise NotConverged("power iteration for lambda_max")

    if null is not None:
        resid = float(np.linalg.norm(A.matvec(null)))
        if resid > 1e-6 * lam_max:
            raise TooManyNullModes(
                f"claimed null vector has residual {resid:.3e}")

    # smallest nonzero eigenvalue: inverse iteration through deflated CG
    x = deflate(rng.standard_normal(n))
    x /= np.linalg.norm(x)
    lam_min = lam_max
    for _ in range(2000):
        res = solve_spd(A, x, tol=1e-12, max_iter=40 * n)
        z = deflate(res.x)
        znorm = float(np.linalg.norm(z))
        if znorm == 0.0:
            raise NotConverged("inverse iteration collapsed onto the null space")
        z /= znorm
        Az = A.matvec(z)
        lam_min = float(z @ Az)
        if np.linalg.norm(Az - lam_min * z) <= tol * abs(lam_min):
            break
        x = z
    else:
        raise NotConverged("inverse iteration for lambda_min")

    if lam_min <= ZERO_EIG_REL * lam_max:
        raise TooManyNullModes("found an additional numerically zero mode")
    nnull = 1 if null is not None else 0
    return SpectrumSummary(lam_min, lam_max, lam_max / lam_min, nnull)
