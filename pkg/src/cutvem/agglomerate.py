"""Stability-ratio-driven element agglomeration.

A face whose element stiffness has a poor stability ratio (smallest over
largest positive eigenvalue) is merged with the edge-adjacent, same-domain
neighbor that maximizes the merged element's ratio, provided the merge
clears both the improvement factor beta and the running optimum. Mesh-wide
passes process faces worst-first from a queue that is only pruned within an
iteration: a merged face is not reexamined until the next iteration, which
bounds polygon growth and lets poor elements benefit from nearby merges.

Vertices are never moved or removed; only the face partition changes.
"""

import csv
from dataclasses import dataclass, field

from .elements import stability_ratio_coords
from .mesh import merge_faces, merged_cycle


@dataclass
class AgglomerationParams:
    """Threshold sigma_eps, improvement factor beta, and sweep count."""
    sigma_eps: float = 0.2
    beta: float = 1.2
    num_iter: int = 5

    def __post_init__(self):
        if not 0.0 < self.sigma_eps < 1.0:
            raise ValueError("sigma_eps must lie in (0, 1)")
        if self.beta <= 1.0:
            raise ValueError("beta must exceed 1")
        if self.num_iter < 1:
            raise ValueError("num_iter must be at least 1")


class StabilityCache:
    """Lazily computed per-face stability ratios, dropped on merge."""

    def __init__(self, mesh, material):
        self.mesh = mesh
        self.material = material
        self._sigma = {}

    def sigma(self, fid):
        s = self._sigma.get(fid)
        if s is None:
            did = self.mesh.domain_id(fid)
            s = stability_ratio_coords(self.mesh.face_coords(fid),
                                       self.material.kappa_of(did),
                                       self.material.tau_of(did))
            self._sigma[fid] = s
        return s

    def invalidate(self, fid):
        self._sigma.pop(fid, None)


def optimal_neighbor(mesh, fid, params, material, cache=None):
    """Best agglomeration partner for one face, or None.

    Returns None immediately when the face's own ratio already exceeds
    sigma_eps. Otherwise each edge-adjacent neighbor is screened for
    agglomerability (the union polygon keeps every vertex of both faces)
    and equal domain id; the trial merged ratio must beat
    min(sigma_eps, beta*sigma(face), beta*sigma(neighbor)) and the best
    trial ratio seen so far, initialized to sigma(face). Trial ratios are
    evaluated on the union polygon without committing anything; ties keep
    the lowest face id.
    """
    if cache is None:
        cache = StabilityCache(mesh, material)
    sigma_f = cache.sigma(fid)
    if sigma_f > params.sigma_eps:
        return None
    best = None
    sigma_best = sigma_f
    kappa = material.kappa_of(mesh.domain_id(fid))
    tau = material.tau_of(mesh.domain_id(fid))
    for nb in mesh.edge_adjacent_neighbors(fid):
        cycle, _reason = merged_cycle(mesh, fid, nb)
        if cycle is None:
            continue  # not agglomerable (pinch, chains, domain)
        sigma_nb = cache.sigma(nb)
        sigma_agg = stability_ratio_coords(mesh.vertices[cycle], kappa, tau)
        if sigma_agg <= min(params.sigma_eps, params.beta * sigma_f,
                            params.beta * sigma_nb):
            continue
        if sigma_agg > sigma_best:
            best = nb
            sigma_best = sigma_agg
    return best


@dataclass
class AgglomerationReport:
    """Per-iteration counters plus before/after stability profiles."""
    iterations: list = field(default_factory=list)
    profile_before: list = field(default_factory=list)
    profile_after: list = field(default_factory=list)

    @property
    def total_merges(self):
        return sum(row["merges"] for row in self.iterations)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# schema: cutvem/agglomeration-report/v1\n")
            w = csv.writer(fh)
            w.writerow(["iteration", "merges", "min_sigma", "faces"])
            for row in self.iterations:
                w.writerow([row["iteration"], row["merges"],
                            f"{row['min_sigma']:.17g}", row["faces"]])

    @staticmethod
    def write_profile_csv(profile, path):
        with open(path, "w", newline="") as fh:
            fh.write("# schema: cutvem/stability-profile/v1\n")
            w = csv.writer(fh)
            w.writerow(["rank", "face", "sigma"])
            for rank, (fid, sigma) in enumerate(profile):
                w.writerow([rank, fid, f"{sigma:.17g}"])


def stability_profile(mesh, material):
    """All faces' stability ratios, sorted ascending (ties by face id)."""
    cache = StabilityCache(mesh, material)
    pairs = sorted((cache.sigma(fid), fid) for fid in mesh.face_ids())
    return [(fid, sigma) for sigma, fid in pairs]


def agglomerate(mesh, params, material):
    """Iterative mesh-wide agglomeration; returns (new mesh, report).

    Each iteration queues every face with sigma < sigma_eps in ascending
    sigma (ties by face id), then repeatedly pops the worst face, asks
    optimal_neighbor for a partner, and on success replaces the pair with
    their union. The union face is not queued again within the iteration.
    The input mesh is left untouched.
    """
    out = mesh.copy()
    cache = StabilityCache(out, material)
    report = AgglomerationReport()
    report.profile_before = stability_profile_from_cache(out, cache)
    for iteration in range(1, params.num_iter + 1):
        queue = sorted((cache.sigma(fid), fid) for fid in out.face_ids()
                       if cache.sigma(fid) < params.sigma_eps)
        dead = set()
        merges = 0
        for sigma_f, fid in queue:
            if fid in dead:
                continue
            nb = optimal_neighbor(out, fid, params, material, cache)
            if nb is None:
                continue
            sigma_nb = cache.sigma(nb)
            new_fid = merge_faces(out, fid, nb)
            dead.add(fid)
            dead.add(nb)
            cache.invalidate(fid)
            cache.invalidate(nb)
            assert cache.sigma(new_fid) > min(sigma_f, sigma_nb)
            merges += 1
        profile = stability_profile_from_cache(out, cache)
        report.iterations.append({
            "iteration": iteration,
            "merges": merges,
            "min_sigma": profile[0][1] if profile else 1.0,
            "faces": out.num_faces,
        })
    report.profile_after = stability_profile_from_cache(out, cache)
    return out, report


def stability_profile_from_cache(mesh, cache):
    pairs = sorted((cache.sigma(fid), fid) for fid in mesh.face_ids())
    return [(fid, sigma) for sigma, fid in pairs]
