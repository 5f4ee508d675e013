"""Tests for the environment settings and the TOML run configuration."""

import math

import pytest

import src.config as config_module
from src.config import Config, LabConfig, get_config, load_lab_config
from src.core.errors import ConfigurationError


def test_lab_config_defaults():
    config = LabConfig()
    assert config.lattice.build().grid_size == 2 * config.lattice.max_degree + 1
    assert config.solver.periodization_radius == pytest.approx(2.0 * config.solver.radius_R)
    assert config.mu == pytest.approx(config.sobolev.mu), "mu defaults to the Sobolev rate exponent"
    assert config.data.phantom == "bump"


def test_small_sobolev_order_rejected():
    with pytest.raises(ConfigurationError, match="m > 3/2") as excinfo:
        LabConfig().with_overrides({"sobolev.m": 1.0})
    assert excinfo.value.exit_code == 2


def test_load_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        "[solver]\ngrid_size = 16\nkappa = 2.0\n\n[sweep]\ndeltas = [0.1, 0.01]\n\n[psi]\nmu = 0.5\n"
    )
    config = load_lab_config(str(path), {"run.seed": 7})
    assert config.solver.grid_size == 16 and config.solver.kappa == 2.0
    assert config.sweep.deltas == [0.1, 0.01]
    assert config.mu == 0.5
    assert config.run.seed == 7, "overrides take precedence over the file"


@pytest.mark.parametrize(
    "text",
    ["[data]\nbogus = 1\n", "[nonsense]\nvalue = 1\n", "[solver]\nradius_R = 2.0\n", "not toml ="],
)
def test_invalid_toml_rejected(tmp_path, text):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_lab_config(str(path))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_lab_config(str(tmp_path / "missing.toml"))


def test_radius_override_recomputes_periodization():
    config = LabConfig().with_overrides({"solver.radius_R": 5.0})
    assert config.solver.periodization_radius == pytest.approx(10.0)
    kept = LabConfig().with_overrides({"solver.radius_R": 5.0, "solver.periodization_radius": 12.0})
    assert kept.solver.periodization_radius == pytest.approx(12.0)


def test_override_keys_need_a_section():
    with pytest.raises(ConfigurationError, match="section.field"):
        LabConfig().with_overrides({"seed": 1})
    assert LabConfig().with_overrides({"run.seed": None}).run.seed == 0, "None values are skipped"


def test_environment_settings(monkeypatch):
    monkeypatch.setenv("VSC_LAB_JOBS", "3")
    monkeypatch.setenv("VSC_LAB_OUTPUT", "memory://runs")
    config = Config()
    assert config.jobs == 3
    assert config.get("output_root") == "memory://runs"
    assert config.get("missing", "fallback") == "fallback"


def test_dynamic_update(monkeypatch):
    monkeypatch.setattr(Config, "_dynamic_settings", {})
    monkeypatch.setattr(config_module, "_config", None)
    Config.update({"logging_level": "DEBUG"})
    assert get_config()["logging_level"] == "DEBUG"
    assert get_config() is get_config(), "the settings dict is cached until the next update"


def test_phantom_radius_default_fits_ball():
    assert LabConfig().data.phantom_radius <= math.pi
