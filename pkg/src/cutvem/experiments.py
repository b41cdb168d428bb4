"""Experiment drivers behind the CLI subcommands.

Every command is deterministic given (config, seed), writes versioned CSV
outputs plus a manifest.json (config echo + library version) into the
output directory, and returns a process exit code. Ensemble realizations
are seeded individually, so serial and parallel runs produce identical
files.
"""

import csv
import json
import os
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from . import __version__
from .agglomerate import agglomerate, stability_profile
from .elements import fem_stiffness, quality_metric, stability_ratio_coords
from .embed import (clip_halfplane, cut_mesh, discard_subdomain,
                    perturb_vertices, sample_levelset)
from .errors import ConfigError, CutVemError
from .kernels import vem_stiffness
from .levelset import Circle
from .mesh import (generate_anisotropic_tri, generate_structured_quad,
                   generate_structured_tri, is_simple_polygon)
from .meshio import export_polymesh, export_svg, import_mesh
from .poisson import (TAG_INNER, TAG_OUTER, error_norms, gradients_to_csv,
                      preset_problem, solution_to_csv, solve_problem)
from .sparse import assemble, extreme_nonzero_eigs
from .svgplot import line_plot, mesh_heatmap, nodal_heatmap

_F = "%.17g"


def _write_manifest(cfg, command, outdir):
    os.makedirs(outdir, exist_ok=True)
    payload = {"command": command, "version": __version__,
               "config": cfg.echo()}
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _csv_writer(fh, schema):
    fh.write(f"# schema: cutvem/{schema}/v1\n")
    return csv.writer(fh)


def build_mesh_from_cfg(cfg):
    if cfg.mesh is None:
        raise ConfigError("no mesh configured")
    kind = cfg.mesh[0]
    if kind == "file":
        return import_mesh(cfg.mesh[1])
    _, nx, ny, domain = cfg.mesh
    if kind == "structured_tri":
        return generate_structured_tri(nx, ny, domain)
    if kind == "anisotropic_tri":
        return generate_anisotropic_tri(nx, ny, domain)
    if kind == "structured_quad":
        return generate_structured_quad(nx, ny, domain)
    raise ConfigError(f"unknown mesh kind {kind!r}")


def assemble_stiffness(mesh, material, method):
    elems = []
    for fid in mesh.face_ids():
        coords = mesh.face_coords(fid)
        did = mesh.domain_id(fid)
        kappa = material.kappa_of(did)
        if method == "fem":
            K_e = fem_stiffness(coords, kappa)
        else:
            K_e = vem_stiffness(coords, kappa, material.tau_of(did))
        elems.append((mesh.face(fid), K_e, None))
    A, _ = assemble(elems, mesh.num_vertices)
    return A


def global_condition(mesh, material, method):
    A = assemble_stiffness(mesh, material, method)
    return extreme_nonzero_eigs(A, known_null=np.ones(A.n))


# ---------------------------------------------------------------------------
# agglomerate

def cmd_agglomerate(cfg):
    outdir = cfg.out
    _write_manifest(cfg, "agglomerate", outdir)
    mesh = build_mesh_from_cfg(cfg)
    material = cfg.material()
    params = cfg.agg_params()
    before = stability_profile(mesh, material)
    agged, report = agglomerate(mesh, params, material)
    after = stability_profile(agged, material)

    export_polymesh(agged.compact(), os.path.join(outdir, "agglomerated.polymesh"))
    report.write_csv(os.path.join(outdir, "report.csv"))
    report.write_profile_csv(before, os.path.join(outdir, "profile_before.csv"))
    report.write_profile_csv(after, os.path.join(outdir, "profile_after.csv"))
    export_svg(mesh, os.path.join(outdir, "before.svg"))
    export_svg(agged, os.path.join(outdir, "after.svg"))
    ranks = list(range(1, len(before) + 1))
    line_plot([("before", ranks, [max(s, 1e-17) for _, s in before]),
               ("after", list(range(1, len(after) + 1)),
                [max(s, 1e-17) for _, s in after])],
              os.path.join(outdir, "profiles.svg"), logy=True,
              title="sorted stability ratios", xlabel="rank", ylabel="sigma")
    print(f"faces: {mesh.num_faces} -> {agged.num_faces} "
          f"({report.total_merges} merges)")
    print(f"min sigma: {before[0][1]:.3e} -> {after[0][1]:.3e}")
    return 0


# ---------------------------------------------------------------------------
# ensemble

def _ensemble_realization(args):
    (base_mesh, phi, h, seed, params, material, band, amplitude) = args
    try:
        pert = perturb_vertices(base_mesh, phi, h, seed, band=band,
                                amplitude=amplitude)
        nodal = sample_levelset(pert, phi)
        cutm = cut_mesh(pert, nodal)
        cond_fem = global_condition(cutm, material, "fem").condition
        cond_vem = global_condition(cutm, material, "vem").condition
        agged, report = agglomerate(cutm, params, material)
        cond_agg = global_condition(agged, material, "vem").condition
        return {"seed": seed, "cond_fem": cond_fem, "cond_vem": cond_vem,
                "cond_agg": cond_agg, "faces_cut": cutm.num_faces,
                "faces_agg": agged.num_faces,
                "merges": report.total_merges, "error": ""}
    except Exception as exc:  # recorded per realization, never fatal here
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}


@dataclass
class EnsembleSummary:
    """Per-method condition-number samples with their quartile statistics.

    Quartiles use linear interpolation between order statistics. `seeds`
    lists the per-realization seeds of the retained samples.
    """
    seeds: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)   # method -> ndarray
    stats: dict = field(default_factory=dict)     # method -> {min,...,max}

    def __getitem__(self, method):
        return self.stats[method]

    @classmethod
    def from_rows(cls, rows):
        good = [r for r in rows if not r["error"]]
        out = cls(seeds=[r["seed"] for r in good])
        for mkey in ("fem", "vem", "agg"):
            vals = np.array([r[f"cond_{mkey}"] for r in good])
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
            out.samples[mkey] = vals
            out.stats[mkey] = {"min": vals.min(), "q1": q1, "median": med,
                               "q3": q3, "max": vals.max()}
        return out


def run_ensemble(cfg, mesh=None):
    """Condition-number ensemble; returns (rows, EnsembleSummary, kappa0)."""
    if mesh is None:
        mesh = build_mesh_from_cfg(cfg)
    for fid in mesh.face_ids():
        if len(mesh.face(fid)) != 3:
            raise ConfigError("ensemble needs a triangulated background mesh")
    phi = cfg.levelset()
    h = mesh.max_edge_length()
    material = cfg.material()
    params = cfg.agg_params()
    kappa0 = global_condition(mesh, material, "fem").condition
    jobs = [(mesh, phi, h, cfg.seed + r, params, material, cfg.band,
             cfg.amplitude) for r in range(1, cfg.n + 1)]
    if cfg.jobs > 1:
        with Pool(cfg.jobs) as pool:
            rows = pool.map(_ensemble_realization, jobs)
    else:
        rows = [_ensemble_realization(j) for j in jobs]
    failures = [r for r in rows if r["error"]]
    if len(failures) > 0.01 * cfg.n:
        raise CutVemError(
            f"{len(failures)} of {cfg.n} realizations failed; first: "
            f"{failures[0]['error']} (seed {failures[0]['seed']})")
    return rows, EnsembleSummary.from_rows(rows), kappa0


def write_ensemble_outputs(outdir, rows, summary, kappa0):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "realizations.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "ensemble-realizations")
        w.writerow(["r", "seed", "cond_fem", "cond_vem", "cond_agg",
                    "faces_cut", "faces_agg", "merges", "error"])
        for r, row in enumerate(rows, 1):
            if row["error"]:
                w.writerow([r, row["seed"], "", "", "", "", "", "",
                            row["error"]])
            else:
                w.writerow([r, row["seed"], _F % row["cond_fem"],
                            _F % row["cond_vem"], _F % row["cond_agg"],
                            row["faces_cut"], row["faces_agg"],
                            row["merges"], ""])
    with open(os.path.join(outdir, "summary.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "ensemble-summary")
        w.writerow(["method", "min", "q1", "median", "q3", "max", "kappa0"])
        for mkey in ("fem", "vem", "agg"):
            s = summary[mkey]
            w.writerow([mkey, _F % s["min"], _F % s["q1"], _F % s["median"],
                        _F % s["q3"], _F % s["max"], _F % kappa0])


def cmd_ensemble(cfg):
    _write_manifest(cfg, "ensemble", cfg.out)
    rows, summary, kappa0 = run_ensemble(cfg)
    write_ensemble_outputs(cfg.out, rows, summary, kappa0)
    print(f"kappa0 = {kappa0:.6g}")
    for mkey in ("fem", "vem", "agg"):
        s = summary[mkey]
        print(f"{mkey}: median {s['median']:.6g}  "
              f"[{s['min']:.6g}, {s['max']:.6g}]")
    return 0


# ---------------------------------------------------------------------------
# refinement

def cmd_refinement(cfg):
    _write_manifest(cfg, "refinement", cfg.out)
    if cfg.mesh is None or cfg.mesh[0] == "file":
        raise ConfigError("refinement needs a generator mesh spec")
    kind, nx, ny, domain = cfg.mesh
    levels = []
    for lvl in range(cfg.levels):
        scale = 2 ** lvl
        level_cfg_mesh = (kind, (nx - 1) * scale + 1, (ny - 1) * scale + 1,
                          domain)
        sub = _with(cfg, mesh=level_cfg_mesh,
                    out=os.path.join(cfg.out, f"level{lvl}"))
        mesh = build_mesh_from_cfg(sub)
        h = mesh.max_edge_length()
        rows, summary, kappa0 = run_ensemble(sub, mesh=mesh)
        write_ensemble_outputs(sub.out, rows, summary, kappa0)
        levels.append({"level": lvl, "h": h, "summary": summary,
                       "kappa0": kappa0})
        print(f"level {lvl}: h = {h:.4g}, median cond "
              + ", ".join(f"{m}={levels[-1]['summary'][m]['median']:.4g}"
                          for m in ("fem", "vem", "agg")))

    with open(os.path.join(cfg.out, "levels.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "refinement-levels")
        w.writerow(["level", "h", "median_fem", "median_vem", "median_agg",
                    "kappa0"])
        for row in levels:
            w.writerow([row["level"], _F % row["h"]]
                       + [_F % row["summary"][m]["median"]
                          for m in ("fem", "vem", "agg")]
                       + [_F % row["kappa0"]])

    hs = np.array([row["h"] for row in levels])
    slopes = {}
    with open(os.path.join(cfg.out, "slopes.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "refinement-slopes")
        w.writerow(["method", "slope"])
        for mkey in ("fem", "vem", "agg"):
            med = np.array([row["summary"][mkey]["median"] for row in levels])
            slope = np.polyfit(np.log(hs), np.log(med), 1)[0]
            slopes[mkey] = slope
            w.writerow([mkey, _F % slope])
            print(f"{mkey}: condition ~ h^{slope:.3f}")
    line_plot([(m, hs, [row["summary"][m]["median"] for row in levels])
               for m in ("fem", "vem", "agg")],
              os.path.join(cfg.out, "refinement.svg"), logx=True, logy=True,
              title="median condition vs h", xlabel="h", ylabel="condition")
    return 0


def _with(cfg, **overrides):
    import copy
    out = copy.deepcopy(cfg)
    for k, v in overrides.items():
        setattr(out, k, v)
    return out


# ---------------------------------------------------------------------------
# convergence

def _level_sizes(cfg):
    base = cfg.base
    if base == 0:
        base = {"uniform": 4, "anisotropic": 2, "clipped": 8,
                "annulus": 12, "bimaterial": 12}[cfg.sequence]
    return [base * 2 ** lvl for lvl in range(cfg.levels)]


def build_level_mesh(cfg, n):
    """Mesh for one convergence level of the configured sequence.

    Returns (mesh, problem). Sequences:
      uniform      structured triangulation of the unit square
      anisotropic  flat-triangle grids, ny = 2.5 * nx^2
      clipped      triangulation of [0,1]x[0,2] clipped along y = 1
                   (the clip line never coincides with a grid line)
      annulus      disc shell 0.4 < r < 1 cut from a background grid
      bimaterial   full disc r < 1 with an inclusion interface at r = 0.4
    """
    if cfg.sequence == "uniform":
        mesh = generate_structured_tri(n + 1, n + 1)
        problem = preset_problem("sinsin")
    elif cfg.sequence == "anisotropic":
        ny = int(round(2.5 * n * n))
        mesh = generate_anisotropic_tri(n, ny)
        problem = preset_problem("sinsin")
    elif cfg.sequence == "clipped":
        tall = generate_structured_tri(n + 1, 2 * n, (0.0, 0.0, 1.0, 2.0))
        mesh = clip_halfplane(tall, ((0.0, 1.0), 1.0), keep=-1)
        name = cfg.problem if cfg.problem.startswith("clipped") \
            else "clipped_dirichlet"
        problem = preset_problem(name)
    elif cfg.sequence in ("annulus", "bimaterial"):
        domain = (-1.2, -1.2, 1.2, 1.2)
        if cfg.background == "quad" and cfg.sequence == "annulus":
            base = generate_structured_quad(n + 1, n + 1, domain)
        else:
            base = generate_structured_tri(n + 1, n + 1, domain)
        m1 = cut_mesh(base, sample_levelset(base, Circle(0.0, 0.0, 1.0)),
                      inside_id=0, outside_id=1, interface_tag=TAG_OUTER)
        m2 = cut_mesh(m1, sample_levelset(m1, Circle(0.0, 0.0, 0.4)),
                      inside_id=2, outside_id=0, only_domain=0,
                      interface_tag=TAG_INNER)
        mesh, _ = discard_subdomain(m2, 1)
        if cfg.sequence == "annulus":
            mesh, _ = discard_subdomain(mesh, 2)
            problem = preset_problem("annulus")
        else:
            problem = preset_problem("bimaterial", ratio=cfg.ratio)
    else:
        raise ConfigError(f"unknown sequence {cfg.sequence!r}")
    return mesh, problem


def _fem_baseline_mesh(cfg, n):
    # FEM comparisons run on uncut triangulations of the problem domain
    if cfg.sequence == "clipped":
        return generate_structured_tri(n + 1, n + 1)
    return None


def run_convergence(cfg, keep_last=False):
    rows = []
    last = None
    for lvl, n in enumerate(_level_sizes(cfg)):
        mesh, problem = build_level_mesh(cfg, n)
        method = cfg.method
        if method == "fem" and cfg.sequence == "clipped":
            mesh = _fem_baseline_mesh(cfg, n)
        if cfg.agg and method == "vem":
            mesh, _ = agglomerate(mesh, cfg.agg_params(), problem.material)
        sol = solve_problem(mesh, problem, method=method, tol=1e-10,
                            max_iter=80 * mesh.num_vertices)
        l2, h1 = error_norms(mesh, sol, problem)
        rows.append({"level": lvl, "dofs": mesh.num_vertices,
                     "l2": l2, "h1": h1})
        if keep_last:
            last = (mesh, sol, problem)
        print(f"level {lvl}: dofs {mesh.num_vertices:6d}  "
              f"L2 {l2:.4e}  H1 {h1:.4e}")
    tail = rows[-3:]
    x = np.log([np.sqrt(r["dofs"]) for r in tail])
    rate_l2 = -np.polyfit(x, np.log([r["l2"] for r in tail]), 1)[0]
    rate_h1 = -np.polyfit(x, np.log([r["h1"] for r in tail]), 1)[0]
    if keep_last:
        return rows, rate_l2, rate_h1, last
    return rows, rate_l2, rate_h1


def cmd_convergence(cfg):
    _write_manifest(cfg, "convergence", cfg.out)
    rows, rate_l2, rate_h1, last = run_convergence(cfg, keep_last=True)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "convergence.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "convergence")
        w.writerow(["level", "dofs", "l2_rel", "h1_rel"])
        for r in rows:
            w.writerow([r["level"], r["dofs"], _F % r["l2"], _F % r["h1"]])
    with open(os.path.join(cfg.out, "rates.csv"), "w", newline="") as fh:
        w = _csv_writer(fh, "convergence-rates")
        w.writerow(["norm", "rate"])
        w.writerow(["l2", _F % rate_l2])
        w.writerow(["h1", _F % rate_h1])
    sq = [np.sqrt(r["dofs"]) for r in rows]
    line_plot([("L2", sq, [r["l2"] for r in rows]),
               ("H1", sq, [r["h1"] for r in rows])],
              os.path.join(cfg.out, "convergence.svg"), logx=True, logy=True,
              title=f"{cfg.sequence} / {cfg.method}"
                    f"{' + agg' if cfg.agg else ''}",
              xlabel="sqrt(dofs)", ylabel="relative error")
    # export the finest-level solution: nodal CSV, gradient CSV, heat maps
    mesh, sol, problem = last
    solution_to_csv(mesh, sol, os.path.join(cfg.out, "solution.csv"))
    gradients_to_csv(mesh, sol, os.path.join(cfg.out, "gradients.csv"))
    nodal_heatmap(mesh, sol.u, os.path.join(cfg.out, "solution.svg"))
    if problem.exact_u is not None:
        err = {fid: abs(np.mean([sol.u[v] - problem.exact_u(*mesh.vertices[v])
                                 for v in mesh.face(fid)]))
               for fid in mesh.face_ids()}
        mesh_heatmap(mesh, err, os.path.join(cfg.out, "error.svg"))
    print(f"rates: L2 {rate_l2:.3f}, H1 {rate_h1:.3f}")
    return 0


# ---------------------------------------------------------------------------
# quality map

def cmd_quality(cfg):
    _write_manifest(cfg, "quality", cfg.out)
    os.makedirs(cfg.out, exist_ok=True)
    g = cfg.grid

    def sweep(path, make_poly, xs, ys):
        with open(path, "w", newline="") as fh:
            w = _csv_writer(fh, "quality-map")
            w.writerow(["x", "y", "sigma", "eta"])
            for y in ys:
                for x in xs:
                    poly = make_poly(x, y)
                    if is_simple_polygon(poly):
                        sigma = stability_ratio_coords(poly)
                        eta = quality_metric(poly)
                    else:
                        sigma = eta = 0.0
                    w.writerow([_F % x, _F % y, _F % sigma, _F % eta])

    xs = np.linspace(-1.5, 1.5, g)
    ys = np.linspace(2.0 / g, 2.0, g)
    sweep(os.path.join(cfg.out, "triangle_map.csv"),
          lambda x, y: np.array([[-1.0, 0.0], [1.0, 0.0], [x, y]]), xs, ys)
    xs = np.linspace(2.0 / g, 2.0, g)
    sweep(os.path.join(cfg.out, "quad_map.csv"),
          lambda x, y: np.array([[0.0, 0.0], [1.0, 0.0], [x, y], [0.0, 1.0]]),
          xs, xs)
    print(f"quality maps on a {g} x {g} grid written to {cfg.out}")
    return 0
