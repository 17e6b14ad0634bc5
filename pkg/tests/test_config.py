from pathlib import Path

import numpy as np
import pytest

from dwcouple.config import ConfigError, load_config, parse_config
from dwcouple.mesh import BoundaryLabel

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_minimal_config_defaults():
    cfg = parse_config("")
    assert cfg.mode == "single_solve"
    assert cfg.tol == 1e-8
    assert cfg.theta == 0.5
    assert cfg.max_iter == 100
    assert cfg.h0 == 0.25
    assert np.array_equal(cfg.wells.f1, [-1, 0]) and np.array_equal(cfg.wells.f2, [1, 0])
    assert all(lab == BoundaryLabel.TRANSMISSION for lab in cfg.side_labels)
    assert cfg.f(0.3, 0.4) == 0.0
    assert cfg.initial_mesh().n_triangles > 0


def test_expression_data():
    cfg = parse_config('[data]\nf = "2*x + sin(pi*y)"\nt0 = 0.5\n')
    assert cfg.f(1.0, 0.0) == pytest.approx(2.0)
    assert cfg.t0(3.0, 4.0) == 0.5
    assert cfg.problem_data().f(1.0, 0.0) == pytest.approx(2.0)


def test_identical_wells_named():
    with pytest.raises(ConfigError, match="wells") as info:
        parse_config("[wells]\nf1 = [1, 2]\nf2 = [1.0, 2.0]\n")
    assert info.value.field == "wells"


def test_parse_error_has_position():
    with pytest.raises(ConfigError, match=r"line 2.*column") as info:
        parse_config('mode = "adaptive"\ntheta = = 3\n')
    assert "parse error" in str(info.value)


def test_expression_error_is_a_config_error():
    with pytest.raises(ConfigError, match=r"data\.f.*offset 2") as info:
        parse_config('[data]\nf = "x ^ 2"\n')
    assert info.value.field == "data.f"


def test_empty_transmission_boundary():
    with pytest.raises(ConfigError, match="transmission boundary is empty"):
        parse_config('[geometry]\nlabels = ["S", "S", "S", "S"]\n')


@pytest.mark.parametrize("theta", ["0", "1.5", "-0.2"])
def test_theta_range(theta):
    with pytest.raises(ConfigError, match="adaptivity.theta"):
        parse_config(f"[adaptivity]\ntheta = {theta}\n")


def test_theta_one_allowed():
    assert parse_config("[adaptivity]\ntheta = 1\n").theta == 1.0


@pytest.mark.parametrize("text, where", [
    ("colour = 1\n", "colour"),
    ("[solver]\ntolerance = 1e-6\n", "solver.tolerance"),
    ("[geometry]\nshape = \"disk\"\n", "geometry.shape"),
    ("mode = \"fast\"\n", "mode"),
    ("[solver]\nmax_iter = 2.5\n", "solver.max_iter"),
    ("[solver]\nseed = -1\n", "solver.seed"),
    ("[geometry]\nh0 = 0\n", "geometry.h0"),
    ("[geometry]\nlabels = { 7 = \"S\" }\n", "geometry.labels"),
    ("[geometry]\nlabels = { 0 = \"X\" }\n", "geometry.labels"),
    ("[wells]\nf1 = [1, 2, 3]\n", "wells.f1"),
    ("geometry = 3\n", "geometry"),
])
def test_field_errors(text, where):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == where


def test_polygon_geometry():
    cfg = parse_config('[geometry]\nshape = "polygon"\nvertices = [[0, 0], [2, 0], [2, 1], [0, 1]]\n'
                       'labels = { 0 = "S" }\nh0 = 0.5\n')
    mesh = cfg.initial_mesh()
    assert mesh.areas.sum() == pytest.approx(2.0)
    assert cfg.side_labels[0] == BoundaryLabel.SIGNORINI


def test_self_intersecting_polygon_rejected():
    with pytest.raises(ConfigError, match="not simple"):
        parse_config('[geometry]\nshape = "polygon"\nvertices = [[0, 0], [1, 1], [1, 0], [0, 1]]\n')


def test_invalid_utf8():
    with pytest.raises(ConfigError, match="UTF-8"):
        parse_config(b"mode = \"\xff\"\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.toml")


def test_overrides():
    cfg = parse_config("")
    over = cfg.with_overrides(theta=0.3, seed=None, max_levels=2)
    assert over.theta == 0.3 and over.seed is None and over.max_levels == 2
    assert cfg.theta == 0.5
    with pytest.raises(ConfigError, match="theta"):
        cfg.with_overrides(theta=2.0)
    with pytest.raises(ConfigError, match="levels"):
        cfg.with_overrides(max_levels=0)


def test_shipped_configs_load():
    bench = load_config(CONFIGS / "benchmark.toml")
    assert bench.mode == "adaptive"
    assert bench.f(0.3, 0.7) == pytest.approx(0.2)
    lshape = load_config(CONFIGS / "lshape.toml")
    assert lshape.initial_mesh().areas.sum() == pytest.approx(3.0)
    opts = lshape.adaptive_options()
    assert opts.mode == "adaptive" and opts.max_levels == lshape.max_levels
    assert lshape.solve_options().tol == lshape.tol
