"""Embedding geometries into meshes: near-interface vertex perturbation,
nodal sampling with snapping, conforming piecewise-linear cutting,
half-plane clipping and subdomain removal.

All operations are pure: they return new meshes and never mutate their
input. Determinism is part of the contract; the perturbation RNG is a
64-bit xorshift* generator with per-vertex streams, so results are
bit-reproducible for a given (mesh, field, h, seed).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCut, EmptyResult, NotATriangulation
from .levelset import Line
from .mesh import PolyMesh, signed_area

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STAR = 0x2545F4914F6CDD1D


class XorShift64Star:
    """Marsaglia xorshift64 with a multiplicative output scramble.

    Shifts (12, 25, 27); uniform doubles take the top 53 output bits.
    A zero state is replaced by a fixed odd constant, and one warm-up
    step decorrelates nearby seeds.
    """

    def __init__(self, seed):
        s = seed & _MASK
        self.state = s if s != 0 else _GOLDEN
        self.next_u64()

    def next_u64(self):
        s = self.state
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK
        s ^= s >> 27
        self.state = s
        return (s * _STAR) & _MASK

    def uniform(self, lo, hi):
        u = self.next_u64() >> 11
        return lo + (hi - lo) * (u * 2.0 ** -53)


def vertex_stream(seed, vertex_index):
    """Independent per-vertex RNG stream."""
    return XorShift64Star((int(seed) ^ (vertex_index * _GOLDEN)) & _MASK)


@dataclass
class NodalLevelSet:
    """Per-vertex samples of a level-set field (defines the piecewise-linear
    interpolant on a triangulation)."""
    values: np.ndarray


def perturb_vertices(mesh, phi, h, seed, band=1.25, amplitude=0.15):
    """Randomly displace vertices within distance band*h of the interface.

    Each eligible vertex moves by (d1, d2) drawn uniformly from
    [-amplitude*h, amplitude*h]^2 from its own seeded stream. A move that
    inverts an incident triangle is retried with halved amplitude up to 5
    times, then skipped, so the output is always a valid triangulation.
    """
    out = mesh.copy()
    pts = out.vertices
    incident = [[] for _ in range(len(pts))]
    for fid in mesh.face_ids():
        cyc = mesh.face(fid)
        if len(cyc) != 3:
            raise NotATriangulation(f"face {fid} has {len(cyc)} vertices")
        for v in cyc:
            incident[v].append(cyc)
    band_abs = band * h
    for i in range(len(pts)):
        if not incident[i]:
            continue
        if abs(float(phi(pts[i, 0], pts[i, 1]))) >= band_abs:
            continue
        rng = vertex_stream(seed, i)
        amp = amplitude * h
        old = pts[i].copy()
        for _ in range(6):  # first try plus 5 halved retries
            pts[i] = old + (rng.uniform(-amp, amp), rng.uniform(-amp, amp))
            if all(signed_area(pts[tri]) > 0.0 for tri in incident[i]):
                break
            pts[i] = old
            amp *= 0.5
    return out


def sample_levelset(mesh, phi, snap_tol=1e-10):
    """Sample phi at the vertices and snap near-zeros to exactly zero.

    The snap threshold is snap_tol times the longest edge incident to the
    vertex, which prevents cut children thinner than round-off while
    leaving intentionally tiny (but resolvable) slivers alone.
    """
    pts = mesh.vertices
    values = np.asarray(phi(pts[:, 0], pts[:, 1]), dtype=float).reshape(-1).copy()
    hloc = np.zeros(len(pts))
    for a, b in mesh._edge_face:
        d = float(np.hypot(*(pts[b] - pts[a])))
        if d > hloc[a]:
            hloc[a] = d
        if d > hloc[b]:
            hloc[b] = d
    values[np.abs(values) < snap_tol * hloc] = 0.0
    return NodalLevelSet(values)


def cut_mesh(mesh, nodal, inside_id=0, outside_id=1, only_domain=None,
             interface_tag=None):
    """Embed the zero set of the piecewise-linear interpolant into the mesh.

    Faces whose nodal values change sign are split along the chord between
    their two boundary zero points (inserted edge zeros and snapped-to-zero
    vertices); the inserted vertices are shared across neighboring faces so
    the result conforms. Each face is labeled inside_id where the
    interpolant is negative and outside_id where positive; all-zero faces
    go inside. With only_domain set, faces of other domains keep their
    label and must not be crossed by the interface.

    Vertices lying on the interface get `interface_tag` when given. The
    result carries `parent_faces`, mapping each new face to the input face
    it came from.
    """
    vals = nodal.values
    if len(vals) != mesh.num_vertices:
        raise ValueError("one nodal value per mesh vertex required")
    pts = [p for p in mesh.vertices]
    tags = list(mesh.vertex_tags)
    if interface_tag is not None:
        for i in range(len(vals)):
            if vals[i] == 0.0:
                tags[i] = interface_tag
    edge_zero = {}

    def zero_on_edge(a, b):
        key = (a, b) if a < b else (b, a)
        vid = edge_zero.get(key)
        if vid is None:
            va, vb = vals[key[0]], vals[key[1]]
            t = va / (va - vb)
            if not 1e-14 < t < 1.0 - 1e-14:
                raise DegenerateCut(f"cut parameter {t} on edge {key}")
            p = pts[key[0]] + t * (pts[key[1]] - pts[key[0]])
            vid = len(pts)
            pts.append(p)
            tags.append(interface_tag if interface_tag is not None else 0)
            edge_zero[key] = vid
            if only_domain is not None:
                twin = mesh.halfedge_twin((a, b))
                if twin is not None:
                    nb = mesh._edge_face[twin][0]
                    if mesh.domain_id(nb) != only_domain:
                        raise NotATriangulation(
                            f"interface crosses edge {key} into domain "
                            f"{mesh.domain_id(nb)}, making the cut non-conforming")
        return vid

    cycles, dids, parents = [], [], []

    def emit(cycle, did, fid):
        cycles.append(list(cycle))
        dids.append(did)
        parents.append(fid)

    for fid in mesh.face_ids():
        cyc = mesh.face(fid)
        did = mesh.domain_id(fid)
        if only_domain is not None and did != only_domain:
            v = vals[cyc]
            if (v > 0).any() and (v < 0).any():
                raise NotATriangulation(
                    f"face {fid} (domain {did}) is crossed by the interface "
                    f"but only domain {only_domain} is being cut")
            emit(cyc, did, fid)
            continue
        v = vals[cyc]
        has_pos = bool((v > 0).any())
        has_neg = bool((v < 0).any())
        if not (has_pos and has_neg):
            emit(cyc, inside_id if has_neg or not has_pos else outside_id, fid)
            continue
        # walk the boundary, inserting edge zeros; collect interface nodes
        walk = []
        n = len(cyc)
        for i in range(n):
            a, b = cyc[i], cyc[(i + 1) % n]
            walk.append((a, vals[a]))
            if vals[a] * vals[b] < 0.0:
                walk.append((zero_on_edge(a, b), 0.0))
        iface = [k for k, (_, val) in enumerate(walk) if val == 0.0]
        if len(iface) != 2:
            raise NotATriangulation(
                f"face {fid} has {len(iface)} interface crossings; only "
                "single-chord cuts of a simple face are supported")
        i0, i1 = iface
        part_a = walk[i0:i1 + 1]
        part_b = walk[i1:] + walk[:i0 + 1]
        for part in (part_a, part_b):
            cyc_part = [vid for vid, _ in part]
            part_vals = [val for _, val in part]
            neg = any(val < 0.0 for val in part_vals)
            emit(cyc_part, inside_id if neg else outside_id, fid)

    out = PolyMesh(np.array(pts), cycles, dids, vertex_tags=np.array(tags))
    out.parent_faces = parents
    return out


def clip_halfplane(mesh, line, keep=-1, interface_tag=None):
    """Cut along a straight line and keep one side.

    `line` is (normal, offset) as in levelset.Line; keep < 0 retains the
    phi < 0 side. Face domain ids are preserved from the input; vertices
    on the clip line are tagged with interface_tag.
    """
    normal, offset = line
    nodal = sample_levelset(mesh, Line(normal, offset))
    # classify with throwaway ids, then restore parents' domains
    cutm = cut_mesh(mesh, nodal, inside_id=-1, outside_id=-2,
                    interface_tag=interface_tag)
    drop = -2 if keep < 0 else -1
    keep_cycles, keep_dids = [], []
    for fid in cutm.face_ids():
        if cutm.domain_id(fid) == drop:
            continue
        keep_cycles.append(cutm.face(fid))
        keep_dids.append(mesh.domain_id(cutm.parent_faces[fid]))
    if not keep_cycles:
        raise EmptyResult("entire mesh is on the discarded side")
    kept = PolyMesh(cutm.vertices, keep_cycles, keep_dids,
                    vertex_tags=cutm.vertex_tags)
    pruned, _ = discard_unreferenced(kept)
    return pruned


def discard_subdomain(mesh, domain_id):
    """Drop all faces of one subdomain and prune unreferenced vertices.

    Returns (mesh, old_to_new) where old_to_new maps old vertex indices to
    new ones (-1 for pruned vertices).
    """
    cycles, dids = [], []
    for fid in mesh.face_ids():
        if mesh.domain_id(fid) == domain_id:
            continue
        cycles.append(mesh.face(fid))
        dids.append(mesh.domain_id(fid))
    if not cycles:
        raise EmptyResult(f"no faces left after discarding domain {domain_id}")
    kept = PolyMesh(mesh.vertices, cycles, dids, vertex_tags=mesh.vertex_tags)
    return discard_unreferenced(kept)


def discard_unreferenced(mesh):
    """Drop vertices not used by any face; returns (mesh, old_to_new)."""
    used = np.zeros(mesh.num_vertices, dtype=bool)
    for fid in mesh.face_ids():
        used[mesh.face(fid)] = True
    old_to_new = np.full(mesh.num_vertices, -1, dtype=int)
    old_to_new[used] = np.arange(int(used.sum()))
    cycles = [[int(old_to_new[v]) for v in mesh.face(fid)]
              for fid in mesh.face_ids()]
    dids = [mesh.domain_id(fid) for fid in mesh.face_ids()]
    out = PolyMesh(mesh.vertices[used], cycles, dids,
                   vertex_tags=mesh.vertex_tags[used])
    return out, old_to_new
