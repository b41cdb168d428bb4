"""Minimal native SVG emitters (scatter/line plots and mesh heat maps).

Data fidelity only; no external plotting dependency.
"""

import numpy as np

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi, log):
    if log:
        lo_e = int(np.floor(np.log10(lo)))
        hi_e = int(np.ceil(np.log10(hi)))
        return [10.0 ** e for e in range(lo_e, hi_e + 1)]
    span = hi - lo
    step = 10.0 ** np.floor(np.log10(span / 4 if span > 0 else 1.0))
    if span / step > 8:
        step *= 2
    t0 = np.ceil(lo / step) * step
    return list(np.arange(t0, hi + 0.5 * step, step))


def line_plot(series, path, title="", xlabel="", ylabel="",
              logx=False, logy=False, width=640, height=480):
    """Write a multi-series line/scatter plot.

    `series` is a list of (label, xs, ys) triples.
    """
    margin = 60
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    fx = np.log10 if logx else (lambda v: v)
    fy = np.log10 if logy else (lambda v: v)
    x_lo, x_hi = xs_all.min(), xs_all.max()
    y_lo, y_hi = ys_all.min(), ys_all.max()
    if x_lo == x_hi:
        x_hi = x_lo + 1.0
    if y_lo == y_hi:
        y_hi = y_lo * 1.1 if y_lo != 0 else 1.0
    tx0, tx1 = fx(x_lo), fx(x_hi)
    ty0, ty1 = fy(y_lo), fy(y_hi)

    def px(v):
        return margin + (fx(v) - tx0) / (tx1 - tx0) * (width - 2 * margin)

    def py(v):
        return height - margin - (fy(v) - ty0) / (ty1 - ty0) * (height - 2 * margin)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" font-family="sans-serif" font-size="11">']
    out.append(f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
               f'height="{height - 2 * margin}" fill="none" stroke="#444"/>')
    for t in _ticks(x_lo, x_hi, logx):
        if x_lo <= t <= x_hi:
            out.append(f'<line x1="{px(t):.1f}" y1="{height - margin}" '
                       f'x2="{px(t):.1f}" y2="{height - margin + 5}" stroke="#444"/>')
            out.append(f'<text x="{px(t):.1f}" y="{height - margin + 18}" '
                       f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi, logy):
        if y_lo <= t <= y_hi:
            out.append(f'<line x1="{margin - 5}" y1="{py(t):.1f}" '
                       f'x2="{margin}" y2="{py(t):.1f}" stroke="#444"/>')
            out.append(f'<text x="{margin - 8}" y="{py(t):.1f}" '
                       f'text-anchor="end" dominant-baseline="middle">{t:g}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
                       f'fill="{color}"/>')
        out.append(f'<text x="{width - margin - 130}" y="{margin + 16 + 14 * k}" '
                   f'fill="{color}">{label}</text>')
    if title:
        out.append(f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
                   f'font-size="14">{title}</text>')
    if xlabel:
        out.append(f'<text x="{width / 2:.0f}" y="{height - 8}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _heat_color(t):
    # blue -> white -> red
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        s = t / 0.5
        r, g, b = int(255 * s), int(255 * s), 255
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 255, int(255 * (1 - s)), int(255 * (1 - s))
    return f"#{r:02x}{g:02x}{b:02x}"


def mesh_heatmap(mesh, face_values, path, width=640):
    """Mesh plot with faces filled by scalar values (min-max normalized)."""
    vals = {fid: float(v) for fid, v in face_values.items()}
    lo = min(vals.values())
    hi = max(vals.values())
    span = hi - lo if hi > lo else 1.0
    pts_lo = mesh.vertices.min(axis=0)
    pts_hi = mesh.vertices.max(axis=0)
    scale = width / max(pts_hi[0] - pts_lo[0], 1e-30)
    height = (pts_hi[1] - pts_lo[1]) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
           f'height="{height:.0f}">']
    for fid in mesh.face_ids():
        color = _heat_color((vals[fid] - lo) / span)
        poly = " ".join(
            f"{(x - pts_lo[0]) * scale:.2f},{(pts_hi[1] - y) * scale:.2f}"
            for x, y in mesh.face_coords(fid))
        out.append(f'<polygon points="{poly}" fill="{color}" '
                   f'stroke="#333" stroke-width="0.4"/>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def nodal_heatmap(mesh, nodal_values, path, width=640):
    """Heat map of vertex values, shown as per-face means."""
    face_vals = {fid: float(np.mean([nodal_values[v] for v in mesh.face(fid)]))
                 for fid in mesh.face_ids()}
    mesh_heatmap(mesh, face_vals, path, width=width)
