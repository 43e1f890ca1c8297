import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallscat import incident as inc
from smallscat.errors import ConfigError, NumericHealthError
from smallscat.harness.cli import main
from smallscat.harness.config import config_from_dict, load_config, load_scene
from smallscat.harness.experiments import (compute_fields, read_field_series, run_convergence, run_oracle,
                                           run_simulation)
from smallscat.harness.io import read_csv, write_csv, write_loglog_svg
from smallscat.harness.metrics import fibonacci_sphere_points, fit_slope, linf_error
from smallscat.laplace_bem import scene_equilibria
from smallscat.models import CapacitanceSummary, born_field

SPHERE_CFG = """
[scene]
epsilon = {eps}
[[scene.obstacles]]
center = [0.0, 0.0, 0.0]
bounding_radius = 0.85
radius = 0.8
level = 1
{extra_obstacle}
[incident]
kind = "modulated_gaussian"
direction = [1.0, -1.0, 1.0]
[cq]
T = 13.0
intervals = {intervals}
[experiment]
models = {models}
points = [[-1.0, -1.0, -1.0], [2.0, 0.0, 0.0]]
epsilons = [0.2, 0.1, 0.05]
"""
SECOND = """[[scene.obstacles]]
center = [-1.0, -1.0, 1.0]
bounding_radius = 0.85
radius = 0.8
level = 1
"""


def write_cfg(tmp_path, models='["born"]', eps=0.1, intervals=256, two=False, name="c.toml"):
    p = tmp_path / name
    p.write_text(SPHERE_CFG.format(models=models, eps=eps, intervals=intervals,
                                   extra_obstacle=SECOND if two else ""))
    return p


# --------------------------------------------------------------------------- metrics


def test_fit_slope_examples():
    fit = fit_slope([(0.2, 0.008), (0.1, 0.001), (0.05, 0.000125)])
    assert fit.slope == pytest.approx(3.0, abs=1e-12)
    assert fit.residual < 1e-12
    with pytest.raises(ValueError):
        fit_slope([(0.1, 0.01)])
    with pytest.raises(NumericHealthError):
        fit_slope([(0.1, 0.0), (0.05, 1e-3)])


@settings(max_examples=30)
@given(st.floats(0.01, 100), st.floats(-4, 4))
def test_fit_slope_planted_power_law(c, p):
    eps = np.array([0.2, 0.1, 0.05])
    assert fit_slope(np.stack([eps, c * eps**p], 1)).slope == pytest.approx(p, abs=1e-9)


def test_fit_slope_noise_monte_carlo():
    eps = np.array([0.2, 0.1, 0.05])
    slopes = []
    for seed in range(200):
        noise = 1 + 0.05 * np.random.default_rng(seed).uniform(-1, 1, 3)
        slopes.append(fit_slope(np.stack([eps, 3 * eps**2 * noise], 1)).slope)
    assert np.all(np.abs(np.array(slopes) - 2) <= 0.15)


def test_fibonacci_points():
    pts = fibonacci_sphere_points(71, 1.5)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.5, atol=1e-12)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(71) * 1e9
    nn = d.min(1)
    assert nn.max() <= 2 * nn.min()
    assert fibonacci_sphere_points(1).shape == (1, 3)


def test_linf_error():
    assert linf_error([[1.0, 2.0]], [[1.5, 1.0]]) == 1.0


# --------------------------------------------------------------------------- io


def test_csv_roundtrip(tmp_path, rng):
    t = np.arange(50) * 0.013
    v = rng.standard_normal(50) * 1e-7
    write_csv(tmp_path / "a.csv", ["t", "value"], zip(t, v), {"config_hash": "abc"})
    prov, header, cols = read_csv(tmp_path / "a.csv")
    assert header == ["t", "value"] and prov["config_hash"] == "abc"
    np.testing.assert_array_equal(cols["t"], t)
    np.testing.assert_array_equal(cols["value"], v)
    text = (tmp_path / "a.csv").read_text()
    assert text.endswith("\n") and "t,value\n" in text
    assert not list(tmp_path.glob(".*tmp"))


def test_svg_writer(tmp_path):
    eps = np.array([0.2, 0.1, 0.05])
    p = write_loglog_svg(tmp_path / "p.svg", {"gfl": (eps, eps**3)}, references={"eps^3": (eps, eps**3)},
                         note="config_hash xyz")
    text = p.read_text()
    assert text.startswith("<svg") and "polyline" in text and "xyz" in text


# --------------------------------------------------------------------------- config


def test_config_validation(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    assert cfg.models == ("born",) and cfg.cq.intervals == 256
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, models="[]"))
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, models='["foldy"]'))
    base = cfg.to_dict()
    data = {"scene": {"obstacles": [{"center": [0, 0, 0], "bounding_radius": 0.85, "radius": 0.8}]},
            "incident": {"kind": "modulated_gaussian", "direction": [1, 0, 0]},
            "experiment": {"epsilons": [0.1, 0.2, 0.05]}}
    with pytest.raises(ConfigError, match="descending"):
        config_from_dict(data)
    data["experiment"] = {"points": [[0.5, 0.0, 0.0]]}
    with pytest.raises(ConfigError, match="outside"):
        config_from_dict(data).scene()
    assert base["cq"]["symbol"] == "bdf2"


def test_config_hash_stable(tmp_path):
    a = load_config(write_cfg(tmp_path))
    b = load_config(write_cfg(tmp_path, name="d.toml"))
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != a.with_overrides(epsilon=0.2).config_hash()


def test_dt_key(tmp_path):
    p = write_cfg(tmp_path)
    p.write_text(p.read_text().replace("intervals = 256", "dt = 0.0126953125"))
    assert load_config(p).cq.intervals == 1024


# --------------------------------------------------------------------------- drivers


def test_born_simulation_matches_closed_form(tmp_path):
    cfg = load_config(write_cfg(tmp_path)).with_overrides(out=str(tmp_path / "out"))
    series = run_simulation(cfg)
    scene = cfg.scene()
    s = CapacitanceSummary.from_equilibria(scene_equilibria(scene), scene)
    grid = cfg.grid()
    for j, fs in enumerate(series):
        expected = born_field(s, cfg.incident_field(), cfg.point_array()[j], grid.times)
        np.testing.assert_array_equal(fs.series.values, expected)
        back = read_field_series(tmp_path / "out" / f"born_p{j}.csv")
        np.testing.assert_array_equal(back.series.values, fs.series.values)
        assert back.provenance["config_hash"] == cfg.config_hash()
        assert "bdf2" in back.provenance["cq"]


def test_simulation_is_deterministic(tmp_path):
    cfg = load_config(write_cfg(tmp_path, models='["simplified", "gfl"]', intervals=64, two=True))
    run_simulation(cfg.with_overrides(out=str(tmp_path / "a")))
    run_simulation(cfg.with_overrides(out=str(tmp_path / "b"), threads=3))
    for f in sorted((tmp_path / "a").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_models_are_linear_in_incident(tmp_path):
    cfg = load_config(write_cfg(tmp_path, intervals=64, two=True))
    scene = cfg.scene()
    grid = cfg.grid()
    f = cfg.incident_field()
    g = inc.sigmoid_sine([0.0, 1.0, 0.0])
    models = ["gfl", "simplified", "born"]
    pts = cfg.point_array()
    a = compute_fields(scene, f, grid, models, pts)
    b = compute_fields(scene, g, grid, models, pts)
    combo = inc.custom_profile(f.direction, np.linspace(-5, 20, 2001), np.zeros(2001))
    assert np.all(compute_fields(scene, combo, grid, ["born"], pts)["born"] == 0.0)
    both = compute_fields(scene, f.scaled(2.0), grid, models, pts)
    for m in models:
        np.testing.assert_allclose(both[m], 2 * a[m], rtol=0, atol=1e-12 * np.abs(a[m]).max())
        assert np.all(np.isfinite(b[m]))


def test_convergence_outputs(tmp_path):
    cfg = load_config(write_cfg(tmp_path, models='["simplified", "born"]', intervals=64, two=True))
    cfg = cfg.with_overrides(reference="simplified", out=str(tmp_path / "conv"))
    res = run_convergence(cfg)
    assert set(res.errors) == {"born"}
    _, header, cols = read_csv(tmp_path / "conv" / "errors.csv")
    assert header == ["epsilon", "model", "error"]
    np.testing.assert_array_equal(cols["epsilon"], [0.2, 0.1, 0.05])
    assert (tmp_path / "conv" / "convergence.svg").exists()
    assert res.slopes["born"].slope == pytest.approx(2.0, abs=0.4)


def test_convergence_needs_three_epsilons(tmp_path):
    cfg = load_config(write_cfg(tmp_path)).with_overrides(epsilons=(0.2, 0.1))
    with pytest.raises(Exception, match="at least 3"):
        run_convergence(cfg)


def test_quick_oracle_passes():
    assert all(c.passed for c in run_oracle(quick=True))


# --------------------------------------------------------------------------- cli


def test_cli_density(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["density", str(cfg), "--out", str(tmp_path / "d")]) == 0
    out = capsys.readouterr().out
    assert "obstacle 0" in out and (tmp_path / "d" / "density.csv").exists()
    assert load_scene(cfg).epsilon == 0.1


def test_cli_simulate_and_errors(tmp_path, capsys):
    cfg = write_cfg(tmp_path, models='["simplified"]')
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "s"), "--model", "born", "--steps", "128"]) == 0
    _, _, cols = read_csv(tmp_path / "s" / "born_p0.csv")
    assert len(cols["t"]) == 129
    bad = write_cfg(tmp_path, models="[]", name="bad.toml")
    assert main(["simulate", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_oracle_quick(capsys):
    assert main(["oracle", "--quick"]) == 0
    assert "PASS" in capsys.readouterr().out
