"""Benchmark the compiled kernels against the pure-Python fallback.

The hot path of agglomeration is the per-polygon element stiffness plus a
small symmetric eigensolve (the stability ratio), invoked once per face and
once per trial merge in every sweep. This script times the two backends on
those kernels and on a full agglomeration-pipeline realization.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from cutvem import _kernels_py
from cutvem import kernels as selected


def _polygons(count, n_lo=3, n_hi=12, seed=0):
    rng = np.random.default_rng(seed)
    polys = []
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        gaps = rng.dirichlet(np.ones(n)) * (2 * np.pi - 0.15 * n) + 0.15
        while gaps.max() >= np.pi - 0.05:
            gaps = rng.dirichlet(np.ones(n)) * (2 * np.pi - 0.15 * n) + 0.15
        ang = np.concatenate([[0.0], np.cumsum(gaps[:-1])])
        rad = rng.uniform(0.5, 1.5, n)
        polys.append(np.ascontiguousarray(
            np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])))
    return polys


def _time(fn, reps=1):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    polys = _polygons(2000)

    def run(impl):
        acc = 0.0
        for p in polys:
            acc += impl.stability_sigma(p, 1.0, 1.0)[0]
        return acc

    rows = []
    t_py = _time(lambda: run(_kernels_py), reps=2)
    t_sel = _time(lambda: run(selected), reps=3)
    rows.append(("stability_sigma x2000", t_py, t_sel))

    k_list = [np.ascontiguousarray(_kernels_py.vem_stiffness(p, 1.0, 1.0))
              for p in polys]
    t_py = _time(lambda: [_kernels_py.sym_eigvals(k) for k in k_list], reps=2)
    t_sel = _time(lambda: [selected.sym_eigvals(k) for k in k_list], reps=3)
    rows.append(("sym_eigvals x2000", t_py, t_sel))

    t_py = _time(lambda: [_kernels_py.vem_stiffness(p, 1.0, 1.0)
                          for p in polys], reps=2)
    t_sel = _time(lambda: [selected.vem_stiffness(p, 1.0, 1.0)
                           for p in polys], reps=3)
    rows.append(("vem_stiffness x2000", t_py, t_sel))
    return rows


def bench_pipeline():
    import os
    from cutvem.agglomerate import AgglomerationParams, agglomerate
    from cutvem.elements import MaterialSpec
    from cutvem.embed import cut_mesh, perturb_vertices, sample_levelset
    from cutvem.levelset import Circle
    from cutvem.mesh import generate_structured_tri

    base = generate_structured_tri(28, 28)
    phi = Circle(0.5, 0.5, 0.313)
    pert = perturb_vertices(base, phi, base.max_edge_length(), seed=17)
    cutm = cut_mesh(pert, sample_levelset(pert, phi))

    def run():
        agglomerate(cutm, AgglomerationParams(), MaterialSpec())

    t_now = _time(run, reps=2)
    forced = os.environ.get("CUTVEM_PURE_PYTHON")
    label = "agglomerate 28x28 cut mesh"
    return label, t_now, forced


def main():
    print(f"selected backend: {selected.BACKEND}")
    if selected.BACKEND != "compiled":
        print("note: compiled backend unavailable; comparing python to itself")
    print(f"{'kernel':28s} {'python':>10s} {'selected':>10s} {'speedup':>8s}")
    for name, t_py, t_sel in bench_kernels():
        print(f"{name:28s} {t_py * 1e3:9.1f}ms {t_sel * 1e3:9.1f}ms "
              f"{t_py / t_sel:7.1f}x")
    label, t_now, forced = bench_pipeline()
    tag = "python" if forced or selected.BACKEND == "python" else "compiled"
    print(f"{label:28s} {'':10s} {t_now * 1e3:9.1f}ms  ({tag})")
    if tag == "compiled":
        print("rerun with CUTVEM_PURE_PYTHON=1 to time the fallback pipeline")


if __name__ == "__main__":
    main()
