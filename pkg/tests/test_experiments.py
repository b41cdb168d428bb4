import filecmp
import os

import numpy as np
import pytest

from cutvem.cli import main
from cutvem.kernels import BACKEND
from cutvem.config import ExperimentConfig, apply_pair, load_config
from cutvem.errors import ConfigError
from cutvem.meshio import export_polymesh, import_polymesh
from tests.test_agglomerate import needle_strip_square

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def read(path):
    with open(path) as fh:
        return fh.read()


def test_config_file_parsing(tmp_path):
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text(
        "# comment\n"
        "mesh = structured_tri 8 8 0 0 1 1\n"
        "levelset = circle 0.5 0.5 0.313\n"
        "levelset = circle 0.2 0.2 0.1\n"
        "levelset = union\n"
        "sigma_eps = 0.25\n"
        "n = 7\n"
        "kappa = 0 2.0\n"
        "agg = off\n")
    cfg = load_config(str(cfg_path))
    assert cfg.mesh == ("structured_tri", 8, 8, (0.0, 0.0, 1.0, 1.0))
    assert cfg.sigma_eps == 0.25
    assert cfg.n == 7
    assert cfg.agg is False
    assert cfg.material().kappa_of(0) == 2.0
    phi = cfg.levelset()
    assert phi(0.2, 0.2) == pytest.approx(-0.1)


def test_config_rejects_unknown_and_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        apply_pair(ExperimentConfig(), "bogus", "1")
    with pytest.raises(ConfigError):
        apply_pair(ExperimentConfig(), "sigma_eps", "1.5")
    with pytest.raises(ConfigError):
        apply_pair(ExperimentConfig(), "beta", "0.5")
    with pytest.raises(ConfigError):
        apply_pair(ExperimentConfig(), "n", "-3")
    with pytest.raises(ConfigError):
        apply_pair(ExperimentConfig(), "method", "fdm")
    bad = tmp_path / "bad.cfg"
    bad.write_text("mesh structured_tri 4 4\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_cli_agglomerate_needle_fixture(tmp_path):
    mesh_path = tmp_path / "needle.polymesh"
    export_polymesh(needle_strip_square(1e-5), str(mesh_path))
    out = tmp_path / "out"
    rc = main(["agglomerate", "--mesh", f"file {mesh_path}",
               "--iters", "2", "--out", str(out)])
    assert rc == 0
    agged = import_polymesh(str(out / "agglomerated.polymesh"))
    assert agged.num_vertices == 6  # dofs preserved
    assert agged.num_faces <= 2
    report = read(out / "report.csv").splitlines()
    assert report[1] == "iteration,merges,min_sigma,faces"
    assert (out / "manifest.json").exists()
    assert (out / "profiles.svg").exists()


def test_cli_ensemble_deterministic_and_parallel(tmp_path):
    args = ["ensemble", "--mesh", "structured_tri 8 8",
            "--levelset", "circle 0.5 0.5 0.3", "--n", "4", "--seed", "11"]
    for run, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
        rc = main(args + ["--jobs", jobs, "--out", str(tmp_path / run)])
        assert rc == 0
    assert filecmp.cmp(tmp_path / "a" / "realizations.csv",
                       tmp_path / "b" / "realizations.csv", shallow=False)
    assert filecmp.cmp(tmp_path / "a" / "realizations.csv",
                       tmp_path / "c" / "realizations.csv", shallow=False)
    assert filecmp.cmp(tmp_path / "a" / "summary.csv",
                       tmp_path / "c" / "summary.csv", shallow=False)


def test_cli_ensemble_uncut_levelset_all_equal(tmp_path):
    # non-intersecting level set + zero amplitude: fem == vem == agg
    out = tmp_path / "out"
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mesh = structured_tri 6 6\n"
                   "levelset = circle 0.5 0.5 5.0\n"
                   "amplitude = 0\n"
                   "n = 1\n")
    rc = main(["ensemble", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    lines = read(out / "realizations.csv").splitlines()
    row = lines[2].split(",")
    cond_fem, cond_vem, cond_agg = (float(row[k]) for k in (2, 3, 4))
    assert cond_fem == pytest.approx(cond_vem, rel=1e-10)
    assert cond_agg == pytest.approx(cond_vem, rel=1e-10)


def test_cli_refinement_smoke(tmp_path):
    out = tmp_path / "ref"
    rc = main(["refinement", "--mesh", "structured_tri 7 7",
               "--levelset", "circle 0.5 0.5 0.3", "--n", "2",
               "--levels", "2", "--out", str(out)])
    assert rc == 0
    slopes = read(out / "slopes.csv").splitlines()
    assert slopes[1] == "method,slope"
    assert len(slopes) == 5
    assert (out / "level0" / "summary.csv").exists()
    assert (out / "level1" / "summary.csv").exists()


def test_cli_convergence_uniform_smoke(tmp_path):
    out = tmp_path / "conv"
    rc = main(["convergence", "--sequence", "uniform", "--method", "fem",
               "--base", "4", "--levels", "3", "--out", str(out)])
    assert rc == 0
    rows = read(out / "convergence.csv").splitlines()
    assert rows[1] == "level,dofs,l2_rel,h1_rel"
    assert len(rows) == 5
    rates = dict(line.split(",") for line in
                 read(out / "rates.csv").splitlines()[2:])
    assert float(rates["l2"]) == pytest.approx(2.0, abs=0.3)
    assert float(rates["h1"]) == pytest.approx(1.0, abs=0.3)


def test_cli_quality_spot_values(tmp_path):
    out = tmp_path / "q"
    rc = main(["quality", "--grid", "4", "--out", str(out)])
    assert rc == 0
    tri = np.genfromtxt(out / "triangle_map.csv", delimiter=",", names=True,
                        skip_header=1)
    assert set(tri.dtype.names) == {"x", "y", "sigma", "eta"}
    quad = np.genfromtxt(out / "quad_map.csv", delimiter=",", names=True,
                         skip_header=1)
    # the (1,1) fourth vertex makes the unit square: eta == 1
    at11 = quad[(np.abs(quad["x"] - 1.0) < 1e-12)
                & (np.abs(quad["y"] - 1.0) < 1e-12)]
    assert len(at11) == 1
    assert at11["eta"][0] == pytest.approx(1.0, rel=1e-12)


def test_quality_degenerate_and_extremes(tmp_path):
    # equilateral apex: eta = 1 and sigma is the maximum over the sweep;
    # near-flat apex: both metrics flag the sliver
    from cutvem.elements import quality_metric, stability_ratio_coords
    eq = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, np.sqrt(3.0)]])
    assert quality_metric(eq) == pytest.approx(1.0, rel=1e-12)
    sig_eq = stability_ratio_coords(eq)
    flat = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1e-3]])
    # eta = 12 tan(pi/3) * 1e-3 / (2 + 2 sqrt(1 + 1e-6))^2 = 1.299e-3
    assert quality_metric(flat) == pytest.approx(1.299e-3, rel=1e-3)
    assert stability_ratio_coords(flat) < 1e-2
    rng = np.random.default_rng(2)
    for _ in range(50):
        apex = np.array([rng.uniform(-1.5, 1.5), rng.uniform(0.05, 2.0)])
        tri = np.array([[-1.0, 0.0], [1.0, 0.0], apex])
        assert stability_ratio_coords(tri) <= sig_eq + 1e-9


@pytest.mark.skipif(BACKEND != "compiled",
                    reason="golden files are pinned to the compiled kernels")
def test_golden_agglomerate_report(tmp_path):
    mesh_path = tmp_path / "needle.polymesh"
    export_polymesh(needle_strip_square(1e-3), str(mesh_path))
    out = tmp_path / "out"
    rc = main(["agglomerate", "--mesh", f"file {mesh_path}",
               "--iters", "2", "--out", str(out)])
    assert rc == 0
    assert read(out / "report.csv") == read(os.path.join(
        GOLDEN, "needle_report.csv"))
    assert read(out / "profile_after.csv") == read(os.path.join(
        GOLDEN, "needle_profile_after.csv"))


@pytest.mark.skipif(BACKEND != "compiled",
                    reason="golden files are pinned to the compiled kernels")
def test_golden_ensemble_summary(tmp_path):
    out = tmp_path / "out"
    rc = main(["ensemble", "--mesh", "structured_tri 8 8",
               "--levelset", "circle 0.5 0.5 0.3", "--n", "3",
               "--seed", "42", "--out", str(out)])
    assert rc == 0
    assert read(out / "summary.csv") == read(os.path.join(
        GOLDEN, "ensemble_summary.csv"))


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    # module errors surface as exit code 1 with a message, not a traceback
    rc = main(["ensemble", "--mesh", "structured_tri 6 6",
               "--out", str(tmp_path / "x")])  # no levelset configured
    assert rc == 1
    assert "levelset" in capsys.readouterr().err
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("bogus_key = 1\n")
    rc = main(["quality", "--config", str(bad_cfg), "--out", str(tmp_path)])
    assert rc == 1
    assert "bogus_key" in capsys.readouterr().err
