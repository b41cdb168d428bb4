"""Planar polygonal meshes: half-edge topology, face merging, generators.

A PolyMesh is a partition of a planar domain into simple CCW polygons.
Faces are stored as vertex-index cycles; deleted faces leave a None
tombstone so face ids stay stable across merges (the agglomeration queue
relies on this). Directed edges (a, b) act as half-edges: the twin of
(a, b) is (b, a), and next/prev follow the owning face's cycle.

Vertex coordinates are never modified by topological operations; merging
faces only rewrites cycles. Geometric predicates use double precision with
a relative tolerance of GEOM_REL_TOL times the polygon diameter.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DanglingVertex, IndexOutOfRange, MergeRejected,
                     NonManifoldEdge, NonSimplePolygon)

GEOM_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# polygon geometry helpers

def signed_area(coords):
    """Shoelace signed area (positive for CCW cycles)."""
    x = coords[:, 0]
    y = coords[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def poly_diameter(coords):
    """Maximum pairwise vertex distance."""
    d = coords[:, None, :] - coords[None, :, :]
    return float(np.sqrt((d * d).sum(axis=2).max()))


@dataclass
class PolygonGeometry:
    """Area, diameter and vertex centroid of one polygon."""
    area: float
    diameter: float
    vertex_centroid: np.ndarray


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(px, py, qx, qy, rx, ry, tol):
    return (min(px, qx) - tol <= rx <= max(px, qx) + tol
            and min(py, qy) - tol <= ry <= max(py, qy) + tol)


def _segments_intersect(p, q, r, s, tol):
    """True if segments pq and rs intersect (properly or by touching)."""
    lpq = np.hypot(q[0] - p[0], q[1] - p[1])
    lrs = np.hypot(s[0] - r[0], s[1] - r[1])
    # cross products have magnitude |segment| * distance-to-line
    d1 = _cross(p[0], p[1], q[0], q[1], r[0], r[1])
    d2 = _cross(p[0], p[1], q[0], q[1], s[0], s[1])
    d3 = _cross(r[0], r[1], s[0], s[1], p[0], p[1])
    d4 = _cross(r[0], r[1], s[0], s[1], q[0], q[1])
    t1 = tol * lpq
    t2 = tol * lrs
    s1 = 0 if abs(d1) <= t1 else (1 if d1 > 0 else -1)
    s2 = 0 if abs(d2) <= t1 else (1 if d2 > 0 else -1)
    s3 = 0 if abs(d3) <= t2 else (1 if d3 > 0 else -1)
    s4 = 0 if abs(d4) <= t2 else (1 if d4 > 0 else -1)
    if s1 * s2 < 0 and s3 * s4 < 0:
        return True
    if s1 == 0 and _on_segment(p[0], p[1], q[0], q[1], r[0], r[1], tol):
        return True
    if s2 == 0 and _on_segment(p[0], p[1], q[0], q[1], s[0], s[1], tol):
        return True
    if s3 == 0 and _on_segment(r[0], r[1], s[0], s[1], p[0], p[1], tol):
        return True
    if s4 == 0 and _on_segment(r[0], r[1], s[0], s[1], q[0], q[1], tol):
        return True
    return False


def is_simple_polygon(coords, tol_rel=GEOM_REL_TOL):
    """Check that a closed CCW/CW vertex cycle bounds a simple polygon.

    Coincident vertices, self-intersections and zero-area (fully collinear)
    cycles all fail. Collinear but distinct consecutive vertices are fine.
    """
    n = len(coords)
    if n < 3:
        return False
    h = poly_diameter(coords)
    if h == 0.0:
        return False
    tol = tol_rel * h
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(coords[i, 0] - coords[j, 0],
                        coords[i, 1] - coords[j, 1]) <= tol:
                return False
    if abs(signed_area(coords)) <= tol * h:
        return False
    for i in range(n):
        p, q = coords[i], coords[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share an endpoint
            r, s = coords[j], coords[(j + 1) % n]
            if _segments_intersect(p, q, r, s, tol):
                return False
    return True


# ---------------------------------------------------------------------------

class PolyMesh:
    """Half-edge mesh of simple CCW polygons with per-face subdomain ids.

    Construct through build_mesh() (validating) or the generators below.
    `faces[fid]` is a list of vertex indices or None once deleted; ids of
    live faces never change.
    """

    def __init__(self, vertices, faces, domain_ids, vertex_tags=None):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.faces = []
        self.domain_ids = []
        if vertex_tags is None:
            self.vertex_tags = np.zeros(len(self.vertices), dtype=int)
        else:
            self.vertex_tags = np.asarray(vertex_tags, dtype=int).copy()
        self._edge_face = {}  # (a, b) -> (fid, position of a in cycle)
        for cycle, did in zip(faces, domain_ids):
            self.add_face(cycle, did, validate=False)

    # -- basic queries ------------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_faces(self):
        return sum(1 for f in self.faces if f is not None)

    def face_ids(self):
        return [i for i, f in enumerate(self.faces) if f is not None]

    def face(self, fid):
        self._check_fid(fid)
        return self.faces[fid]

    def face_coords(self, fid):
        return self.vertices[self.face(fid)]

    def domain_id(self, fid):
        self._check_fid(fid)
        return self.domain_ids[fid]

    def _check_fid(self, fid):
        if not (0 <= fid < len(self.faces)) or self.faces[fid] is None:
            raise IndexOutOfRange(f"no face {fid}")

    # -- half-edge view -----------------------------------------------------

    def halfedge_face(self, he):
        rec = self._edge_face.get(he)
        return None if rec is None else rec[0]

    def halfedge_twin(self, he):
        a, b = he
        return (b, a) if (b, a) in self._edge_face else None

    def halfedge_next(self, he):
        fid, pos = self._edge_face[he]
        cyc = self.faces[fid]
        n = len(cyc)
        return (cyc[(pos + 1) % n], cyc[(pos + 2) % n])

    def halfedge_prev(self, he):
        fid, pos = self._edge_face[he]
        cyc = self.faces[fid]
        n = len(cyc)
        return (cyc[(pos - 1) % n], cyc[pos % n])

    def face_halfedges(self, fid):
        cyc = self.face(fid)
        n = len(cyc)
        return [(cyc[i], cyc[(i + 1) % n]) for i in range(n)]

    # -- topology edits -----------------------------------------------------

    def add_face(self, cycle, domain_id, validate=True):
        cycle = [int(v) for v in cycle]
        if len(cycle) < 3:
            raise NonSimplePolygon(f"cycle with {len(cycle)} vertices")
        for v in cycle:
            if not (0 <= v < len(self.vertices)):
                raise IndexOutOfRange(f"vertex index {v}")
        coords = self.vertices[cycle]
        if signed_area(coords) < 0:
            cycle = cycle[::-1]
            coords = coords[::-1]
        if validate and not is_simple_polygon(coords):
            raise NonSimplePolygon(f"cycle {cycle} is not a simple polygon")
        fid = len(self.faces)
        n = len(cycle)
        for i in range(n):
            he = (cycle[i], cycle[(i + 1) % n])
            if he in self._edge_face:
                raise NonManifoldEdge(
                    f"edge {he} bounds faces {self._edge_face[he][0]} and {fid}")
        self.faces.append(cycle)
        self.domain_ids.append(domain_id)
        for i in range(n):
            self._edge_face[(cycle[i], cycle[(i + 1) % n])] = (fid, i)
        return fid

    def delete_face(self, fid):
        cyc = self.face(fid)
        n = len(cyc)
        for i in range(n):
            del self._edge_face[(cyc[i], cyc[(i + 1) % n])]
        self.faces[fid] = None
        self.domain_ids[fid] = None

    def edge_adjacent_neighbors(self, fid):
        """Faces sharing at least one full edge with `fid`, no duplicates."""
        out = []
        for he in self.face_halfedges(fid):
            twin = self.halfedge_twin(he)
            if twin is not None:
                nb = self._edge_face[twin][0]
                if nb != fid and nb not in out:
                    out.append(nb)
        return sorted(out)

    # -- boundary -----------------------------------------------------------

    def boundary_halfedges(self):
        """Directed face edges with no twin (the domain boundary)."""
        return [he for he in self._edge_face
                if (he[1], he[0]) not in self._edge_face]

    def boundary_vertex_ids(self):
        ids = set()
        for a, b in self.boundary_halfedges():
            ids.add(a)
            ids.add(b)
        return sorted(ids)

    # -- geometry -----------------------------------------------------------

    def face_area(self, fid):
        return float(signed_area(self.face_coords(fid)))

    def total_area(self):
        return float(sum(self.face_area(f) for f in self.face_ids()))

    def max_edge_length(self):
        best = 0.0
        for (a, b) in self._edge_face:
            d = float(np.hypot(*(self.vertices[b] - self.vertices[a])))
            if d > best:
                best = d
        return best

    # -- bookkeeping --------------------------------------------------------

    def copy(self):
        out = PolyMesh.__new__(PolyMesh)
        out.vertices = self.vertices.copy()
        out.faces = [None if f is None else list(f) for f in self.faces]
        out.domain_ids = list(self.domain_ids)
        out.vertex_tags = self.vertex_tags.copy()
        out._edge_face = dict(self._edge_face)
        return out

    def compact(self):
        """New mesh with tombstones dropped and faces renumbered."""
        live = self.face_ids()
        return PolyMesh(self.vertices, [self.faces[f] for f in live],
                        [self.domain_ids[f] for f in live],
                        vertex_tags=self.vertex_tags)

    def validate(self):
        """Recheck the mesh invariants; raises on violation."""
        for fid in self.face_ids():
            coords = self.face_coords(fid)
            if signed_area(coords) <= 0:
                raise NonSimplePolygon(f"face {fid} is not CCW-positive")
            if not is_simple_polygon(coords):
                raise NonSimplePolygon(f"face {fid} is not simple")
        for he, (fid, pos) in self._edge_face.items():
            cyc = self.faces[fid]
            assert cyc is not None
            assert (cyc[pos], cyc[(pos + 1) % len(cyc)]) == he
            twin = self.halfedge_twin(he)
            if twin is not None:
                assert self.halfedge_twin(twin) == he


# ---------------------------------------------------------------------------

def build_mesh(points, face_cycles, domain_ids=None):
    """Validated mesh construction from points and CCW (or CW) index cycles.

    CW cycles are reoriented. Raises NonSimplePolygon / NonManifoldEdge /
    IndexOutOfRange; warns about vertices referenced by no face.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if domain_ids is None:
        domain_ids = [0] * len(face_cycles)
    if len(domain_ids) != len(face_cycles):
        raise IndexOutOfRange("one domain_id per face required")
    mesh = PolyMesh(points, [], [])
    for cycle, did in zip(face_cycles, domain_ids):
        mesh.add_face(cycle, did, validate=True)
    used = np.zeros(len(points), dtype=bool)
    for fid in mesh.face_ids():
        used[mesh.faces[fid]] = True
    if not used.all():
        dangling = np.flatnonzero(~used)
        warnings.warn(f"dangling vertices: {dangling.tolist()}",
                      DanglingVertex, stacklevel=2)
    return mesh


def polygon_geometry(mesh, fid):
    """Area (shoelace), diameter and vertex centroid of one face."""
    coords = mesh.face_coords(fid)
    return PolygonGeometry(area=float(signed_area(coords)),
                           diameter=poly_diameter(coords),
                           vertex_centroid=coords.mean(axis=0))


# ---------------------------------------------------------------------------
# face merging

def merged_cycle(mesh, f1, f2):
    """Boundary cycle of the union of two edge-adjacent faces.

    Returns (cycle, None) on success or (None, reason) where reason is one
    of the MergeRejected reason strings. Does not modify the mesh; used both
    for trial agglomerations and by merge_faces.
    """
    c1 = mesh.face(f1)
    c2 = mesh.face(f2)
    if f1 == f2:
        return None, MergeRejected.NOT_ADJACENT
    n1 = len(c1)
    edges2 = set(mesh.face_halfedges(f2))
    shared = [i for i in range(n1)
              if (c1[(i + 1) % n1], c1[i]) in edges2]
    if not shared:
        return None, MergeRejected.NOT_ADJACENT
    if len(shared) == n1:
        return None, MergeRejected.MULTIPLE_CHAINS
    shared_set = set(shared)
    starts = [i for i in shared if (i - 1) % n1 not in shared_set]
    if len(starts) > 1:
        return None, MergeRejected.MULTIPLE_CHAINS
    if mesh.domain_id(f1) != mesh.domain_id(f2):
        return None, MergeRejected.DOMAIN_MISMATCH
    start = starts[0]
    m = len(shared)  # chain edges c1[start] -> ... -> c1[start+m]
    v_first = c1[start]
    v_last = c1[(start + m) % n1]
    # walk f1 from the chain's last vertex around to its first vertex
    cycle = []
    k = (start + m) % n1
    while True:
        cycle.append(c1[k])
        if c1[k] == v_first:
            break
        k = (k + 1) % n1
    # then f2 from the vertex after v_first around to v_last (exclusive)
    n2 = len(c2)
    k = (c2.index(v_first) + 1) % n2
    while c2[k] != v_last:
        cycle.append(c2[k])
        k = (k + 1) % n2
    merged_set = set(cycle)
    if len(merged_set) != len(cycle):
        return None, MergeRejected.PINCH_VERTEX
    if merged_set != set(c1) | set(c2):
        # a vertex interior to the shared chain would leave the boundary
        return None, MergeRejected.PINCH_VERTEX
    return cycle, None


def merge_faces(mesh, f1, f2):
    """Merge two edge-adjacent faces in place; returns the new face id.

    The shared edge chain is removed; all vertices of both faces stay on
    the merged boundary (collinear hanging nodes included). Raises
    MergeRejected(NotAdjacent | PinchVertex | MultipleChains |
    DomainMismatch) when the union is not a valid single polygon.
    """
    cycle, reason = merged_cycle(mesh, f1, f2)
    if cycle is None:
        raise MergeRejected(reason, f"faces {f1}, {f2}")
    did = mesh.domain_id(f1)
    mesh.delete_face(f1)
    mesh.delete_face(f2)
    return mesh.add_face(cycle, did, validate=False)


# ---------------------------------------------------------------------------
# structured generators

def _grid_points(nx, ny, domain):
    x0, y0, x1, y1 = domain
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    pts = np.empty((nx * ny, 2))
    for j in range(ny):
        pts[j * nx:(j + 1) * nx, 0] = xs
        pts[j * nx:(j + 1) * nx, 1] = ys[j]
    tags = np.zeros(nx * ny, dtype=int)
    for j in range(ny):
        for i in range(nx):
            if i in (0, nx - 1) or j in (0, ny - 1):
                tags[j * nx + i] = 1
    return pts, tags


def generate_structured_tri(nx, ny, domain=(0.0, 0.0, 1.0, 1.0)):
    """Uniform grid triangulation; every cell split by its lower-left to
    upper-right diagonal. Boundary vertices get tag 1."""
    assert nx >= 2 and ny >= 2
    pts, tags = _grid_points(nx, ny, domain)
    cycles = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            v00 = j * nx + i
            v10 = v00 + 1
            v01 = v00 + nx
            v11 = v01 + 1
            cycles.append([v00, v10, v11])
            cycles.append([v00, v11, v01])
    mesh = PolyMesh(pts, cycles, [0] * len(cycles), vertex_tags=tags)
    return mesh


def generate_anisotropic_tri(nx, ny, domain=(0.0, 0.0, 1.0, 1.0)):
    """Anisotropic triangulation with staggered rows of nx nodes each.

    Odd rows are shifted by half the x-spacing (ends clamped to the domain
    so every row still has nx nodes), and consecutive rows are joined by a
    zigzag march. With ny >> nx this produces rows of flattened cap
    triangles whose largest angle approaches 180 degrees; linear finite
    elements lose convergence on such meshes, which is exactly the
    behavior the anisotropic studies need. The caps are deliberately not
    Delaunay: on staggered rows the empty-circumcircle test fails once the
    row spacing is much smaller than the column spacing.
    """
    assert nx >= 2 and ny >= 2
    x0, y0, x1, y1 = domain
    s = (x1 - x0) / (nx - 1)
    ys = np.linspace(y0, y1, ny)
    rows = []
    pts = []
    for j in range(ny):
        if j % 2 == 0 or nx == 2:
            xs = x0 + s * np.arange(nx)
        else:
            xs = np.concatenate([[x0], x0 + s * (np.arange(nx - 2) + 0.5),
                                 [x1]])
        rows.append(list(range(len(pts), len(pts) + nx)))
        pts.extend((x, ys[j]) for x in xs)
    pts = np.asarray(pts)
    cycles = []
    for j in range(ny - 1):
        a, b = rows[j], rows[j + 1]
        ia = ib = 0
        while ia < nx - 1 or ib < nx - 1:
            # advance along whichever row has the nearer next node
            if ib == nx - 1 or (ia < nx - 1
                                and pts[a[ia + 1], 0] <= pts[b[ib + 1], 0]):
                cycles.append([a[ia], a[ia + 1], b[ib]])
                ia += 1
            else:
                cycles.append([a[ia], b[ib + 1], b[ib]])
                ib += 1
    tags = np.zeros(len(pts), dtype=int)
    for j in (0, ny - 1):
        tags[rows[j]] = 1
    for j in range(ny):
        tags[rows[j][0]] = 1
        tags[rows[j][-1]] = 1
    return PolyMesh(pts, cycles, [0] * len(cycles), vertex_tags=tags)


def generate_structured_quad(nx, ny, domain=(0.0, 0.0, 1.0, 1.0)):
    """Uniform grid of quadrilateral cells (used as a cut background)."""
    assert nx >= 2 and ny >= 2
    pts, tags = _grid_points(nx, ny, domain)
    cycles = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            v00 = j * nx + i
            cycles.append([v00, v00 + 1, v00 + nx + 1, v00 + nx])
    return PolyMesh(pts, cycles, [0] * len(cycles), vertex_tags=tags)


def is_delaunay(mesh, rel_tol=1e-9):
    """Empty-circumcircle test for a triangulation (debug helper).

    True when no mesh vertex lies strictly inside any triangle's
    circumcircle; cocircular configurations pass.
    """
    pts = mesh.vertices
    for fid in mesh.face_ids():
        tri = mesh.face(fid)
        if len(tri) != 3:
            return False
        ax, ay = pts[tri[0]]
        bx, by = pts[tri[1]]
        cx, cy = pts[tri[2]]
        d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay)
              + (cx ** 2 + cy ** 2) * (ay - by)) / d
        uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx)
              + (cx ** 2 + cy ** 2) * (bx - ax)) / d
        r2 = (ax - ux) ** 2 + (ay - uy) ** 2
        d2 = (pts[:, 0] - ux) ** 2 + (pts[:, 1] - uy) ** 2
        inside = d2 < r2 * (1.0 - rel_tol)
        inside[tri] = False
        if inside.any():
            return False
    return True
