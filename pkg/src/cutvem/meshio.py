"""Mesh file I/O.

Formats:
  polymesh  versioned text format, round-trip safe:
                line 1: "polymesh 1"
                line 2: "nv nf"
                nv lines: "x y"
                nf lines: "k v1 ... vk d"   (0-based CCW indices, d = domain)
  triangle  import of .node/.ele pairs (attributes ignored, boundary
            markers kept as vertex tags, 1-based indices rebased)
  svg       export only; one <polygon> per face, fill keyed by domain_id.
"""

import os

import numpy as np

from .errors import IndexOutOfRange, ParseError
from .mesh import PolyMesh

_FMT = "%.17g"  # exact binary round trip for doubles

_SVG_FILLS = ["#9ecae1", "#fdae6b", "#a1d99b", "#bcbddc", "#fc9272",
              "#cccccc", "#ffff99", "#c7e9c0"]


def export_polymesh(mesh, path):
    live = mesh.face_ids()
    lines = ["polymesh 1", f"{mesh.num_vertices} {len(live)}"]
    for x, y in mesh.vertices:
        lines.append(f"{_FMT % x} {_FMT % y}")
    for fid in live:
        cyc = mesh.face(fid)
        lines.append(" ".join([str(len(cyc))] + [str(v) for v in cyc]
                              + [str(mesh.domain_id(fid))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_polymesh(path):
    with open(path) as fh:
        raw = fh.read().splitlines()

    def fail(lineno, msg):
        raise ParseError(path, lineno, msg)

    if not raw or raw[0].split() != ["polymesh", "1"]:
        fail(1, "expected header 'polymesh 1'")
    if len(raw) < 2:
        fail(2, "missing 'nv nf' line")
    try:
        nv, nf = (int(t) for t in raw[1].split())
    except ValueError:
        fail(2, f"bad count line {raw[1]!r}")
    if len(raw) < 2 + nv + nf:
        fail(len(raw) + 1, f"truncated file: need {2 + nv + nf} lines")
    pts = np.empty((nv, 2))
    for i in range(nv):
        try:
            x, y = (float(t) for t in raw[2 + i].split())
        except ValueError:
            fail(3 + i, f"bad vertex line {raw[2 + i]!r}")
        pts[i] = (x, y)
    cycles, dids = [], []
    for i in range(nf):
        lineno = 3 + nv + i
        toks = raw[2 + nv + i].split()
        try:
            k = int(toks[0])
            vals = [int(t) for t in toks[1:]]
        except (ValueError, IndexError):
            fail(lineno, f"bad face line {raw[2 + nv + i]!r}")
        if len(vals) != k + 1:
            fail(lineno, f"face line expects {k} indices + domain id")
        if any(not 0 <= v < nv for v in vals[:k]):
            raise IndexOutOfRange(f"{path}:{lineno}: vertex index out of range")
        cycles.append(vals[:k])
        dids.append(vals[k])
    return PolyMesh(pts, cycles, dids)


def import_triangle(path):
    """Import a Triangle-format .node/.ele pair.

    `path` may point at either file or the common stem. Boundary markers
    populate vertex tags; vertex/element attributes are ignored.
    """
    stem = path
    for suffix in (".node", ".ele"):
        if stem.endswith(suffix):
            stem = stem[:-len(suffix)]
    node_path, ele_path = stem + ".node", stem + ".ele"

    def tokens(p):
        out = []
        with open(p) as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if body:
                    out.append((lineno, body.split()))
        return out

    ntoks = tokens(node_path)
    if not ntoks:
        raise ParseError(node_path, 1, "empty file")
    try:
        nv, dim, nattr, nmark = (int(t) for t in ntoks[0][1])
    except ValueError:
        raise ParseError(node_path, ntoks[0][0], "bad .node header") from None
    if dim != 2:
        raise ParseError(node_path, ntoks[0][0], f"dimension {dim} != 2")
    if len(ntoks) - 1 < nv:
        raise ParseError(node_path, ntoks[-1][0], "truncated .node file")
    ids = np.empty(nv, dtype=int)
    pts = np.empty((nv, 2))
    marks = np.zeros(nv, dtype=int)
    for r in range(nv):
        lineno, t = ntoks[1 + r]
        want = 3 + nattr + nmark
        if len(t) < want:
            raise ParseError(node_path, lineno, f"expected {want} columns")
        ids[r] = int(t[0])
        pts[r] = (float(t[1]), float(t[2]))
        if nmark:
            marks[r] = int(t[3 + nattr])
    base = ids.min()
    if base not in (0, 1):
        raise ParseError(node_path, ntoks[1][0], f"unsupported index base {base}")
    order = np.argsort(ids)
    pts, marks = pts[order], marks[order]

    etoks = tokens(ele_path)
    if not etoks:
        raise ParseError(ele_path, 1, "empty file")
    try:
        ne, npertri, _ = (int(t) for t in etoks[0][1])
    except ValueError:
        raise ParseError(ele_path, etoks[0][0], "bad .ele header") from None
    if npertri != 3:
        raise ParseError(ele_path, etoks[0][0], "only 3-node triangles supported")
    if len(etoks) - 1 < ne:
        raise ParseError(ele_path, etoks[-1][0], "truncated .ele file")
    cycles = []
    for r in range(ne):
        lineno, t = etoks[1 + r]
        if len(t) < 4:
            raise ParseError(ele_path, lineno, "expected 4 columns")
        tri = [int(v) - base for v in t[1:4]]
        if any(not 0 <= v < nv for v in tri):
            raise IndexOutOfRange(f"{ele_path}:{lineno}: vertex index out of range")
        cycles.append(tri)
    return PolyMesh(pts, cycles, [0] * ne, vertex_tags=marks)


def export_svg(mesh, path, width=640):
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = np.maximum(hi - lo, 1e-30)
    scale = width / span[0]
    height = span[1] * scale
    pad = 0.02 * width

    def sx(x):
        return pad + (x - lo[0]) * scale

    def sy(y):
        return pad + (hi[1] - y) * scale  # flip y for screen coordinates

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{width + 2 * pad:.0f}" height="{height + 2 * pad:.0f}">']
    for fid in mesh.face_ids():
        did = mesh.domain_id(fid)
        fill = _SVG_FILLS[did % len(_SVG_FILLS)] if did is not None else "none"
        pts = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in mesh.face_coords(fid))
        parts.append(f'<polygon points="{pts}" fill="{fill}" '
                     f'stroke="black" stroke-width="0.6"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def import_mesh(path, format=None):
    if format is None:
        format = "triangle" if path.endswith((".node", ".ele")) else "polymesh"
    if format == "polymesh":
        return import_polymesh(path)
    if format in ("triangle", "triangle-node-ele"):
        return import_triangle(path)
    raise ValueError(f"unknown import format {format!r}")


def export_mesh(mesh, path, format=None):
    if format is None:
        format = "svg" if os.path.splitext(path)[1] == ".svg" else "polymesh"
    if format == "polymesh":
        export_polymesh(mesh, path)
    elif format == "svg":
        export_svg(mesh, path)
    else:
        raise ValueError(f"unknown export format {format!r}")
