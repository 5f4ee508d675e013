"""End-to-end tests of the subcommands through the LabManager and the CLI entry point."""

import csv
import io
import json

import numpy as np
import pytest

import src.config as config_module
from src.app.app_manager import SUBCOMMANDS, LabManager, default_run_id
from src.config import LabConfig
from src.main import build_parser, main, overrides_from_args
from src.storage.storage_impl import ArtifactStorage


SMALL = {
    "lattice.max_degree": 2,
    "solver.grid_size": 16,
    "data.n_sources": 6,
    "data.n_dirs": 6,
}


def _manager(tmp_path, **overrides):
    config = LabConfig().with_overrides({**SMALL, "run.output": str(tmp_path), **overrides})
    return LabManager(config, storage=ArtifactStorage(str(tmp_path / "run")), run_id="test-run")


def _manifest(manager):
    return json.loads(manager.storage.read_bytes("manifest.json"))


@pytest.mark.asyncio
async def test_forward_zero_phantom(tmp_path):
    manager = _manager(tmp_path, **{"data.phantom": "zero", "data.kind": "far"})
    try:
        assert await manager.run("forward") == 0
    finally:
        manager.close()
    summary = json.loads(manager.storage.read_bytes("forward.json"))
    assert summary["kind"] == "far_field"
    assert summary["data_norm"] == 0.0, "the far field of f = 0 vanishes"
    manifest = _manifest(manager)
    assert manifest["run_id"] == "test-run" and manifest["exit_code"] == 0
    assert [o["path"] for o in manifest["outputs"]] == ["data.bin", "field.bin", "forward.json"]
    assert set(manifest["inputs"]) == {"config", "f_dagger"}
    assert "total" in manifest["timings"]


@pytest.mark.asyncio
async def test_gos_check_below_admissibility_exits_with_failure(tmp_path):
    manager = _manager(tmp_path, **{"gos.t_min": 0.01, "gos.t_max": 0.05, "gos.n_t": 2})
    try:
        assert await manager.run("gos-check") == 3
    finally:
        manager.close()
    manifest = _manifest(manager)
    assert manifest["exit_code"] == 3
    assert manifest["diagnostics"]["error"]["type"] == "AdmissibilityError"


@pytest.mark.asyncio
async def test_rate_sweep_emits_records(tmp_path):
    manager = _manager(
        tmp_path, **{"sweep.deltas": [1e-1, 1e-2], "tikhonov.max_iterations": 2, "data.kind": "far"}
    )
    records = []
    manager.on("record", records.append)
    try:
        assert await manager.run("rate-sweep") == 0
    finally:
        manager.close()
    assert len(records) == 2
    rows = list(csv.DictReader(io.StringIO(manager.storage.read_bytes("sweep.csv").decode())))
    assert [float(r["delta"]) for r in rows] == [1e-2, 1e-1]
    summary = json.loads(manager.storage.read_bytes("sweep.json"))
    assert summary["n_records"] == 2 and len(summary["bound_holds"]) == 2


@pytest.mark.asyncio
async def test_lattice_audit(tmp_path):
    manager = _manager(tmp_path)
    try:
        assert await manager.run("lattice-audit") == 0
    finally:
        manager.close()
    summary = json.loads(manager.storage.read_bytes("lattice_audit.json"))
    assert summary["split_checks"]["n_failed"] == 0
    assert summary["split_checks"]["n_checked"] == 400
    assert len(summary["lattice_sums"]) == 5


@pytest.mark.asyncio
async def test_missing_field_file_is_a_configuration_error(tmp_path):
    manager = _manager(tmp_path, **{"data.phantom": "file", "data.field_path": str(tmp_path / "none.bin")})
    try:
        assert await manager.run("forward") == 2
    finally:
        manager.close()
    assert _manifest(manager)["diagnostics"]["error"]["type"] == "ConfigurationError"


@pytest.mark.asyncio
async def test_unexpected_error_is_recorded_as_failure(tmp_path, mocker):
    manager = _manager(tmp_path)
    mocker.patch.dict(
        manager._handlers, {"forward": mocker.AsyncMock(side_effect=np.linalg.LinAlgError("singular matrix"))}
    )
    try:
        assert await manager.run("forward") == 3
    finally:
        manager.close()
    manifest = _manifest(manager)
    assert manifest["exit_code"] == 3, "a crashed run must not claim success"
    assert manifest["diagnostics"]["error"] == {"type": "LinAlgError", "message": "singular matrix"}


def test_default_run_id_follows_config_and_seed():
    config = LabConfig().with_overrides(SMALL)
    assert default_run_id(config) == default_run_id(LabConfig().with_overrides(SMALL))
    assert default_run_id(config).endswith("-s0")
    assert default_run_id(config) != default_run_id(config.with_overrides({"run.seed": 7}))


@pytest.mark.asyncio
async def test_rate_sweep_is_reproducible(tmp_path):
    overrides = {**SMALL, "sweep.deltas": [1e-1, 1e-2], "tikhonov.max_iterations": 2, "data.kind": "far"}
    config = LabConfig().with_overrides({**overrides, "run.output": str(tmp_path)})
    runs = []
    for name in ("first", "second"):
        manager = LabManager(config, storage=ArtifactStorage(str(tmp_path / name)))
        records = []
        manager.on("record", records.append)
        try:
            assert await manager.run("rate-sweep") == 0
        finally:
            manager.close()
        artifacts = {p: manager.storage.read_bytes(p) for p in ("sweep.csv", "sweep.json", "sweep_plot.dat")}
        manifest = _manifest(manager)
        manifest.pop("timings")
        runs.append((manager.run_id, sorted(records, key=lambda r: r.delta), artifacts, manifest))
    first, second = runs
    assert first[0] == second[0] == default_run_id(config)
    assert first[1] == second[1], "same config and seed should give the same records"
    assert first[2] == second[2], "sweep artifacts should be byte-identical"
    assert first[3] == second[3], "manifests should differ only in timings"


def test_cli_overrides():
    args = build_parser().parse_args(["rate-sweep", "--deltas", "0.1,0.01", "--kappa", "2", "--field", "f.bin"])
    overrides = overrides_from_args(args)
    assert overrides["sweep.deltas"] == [0.1, 0.01]
    assert overrides["solver.kappa"] == 2.0
    assert overrides["data.phantom"] == "file" and overrides["data.field_path"] == "f.bin"
    assert "solver.grid_size" not in overrides


def test_cli_rejects_unknown_subcommand():
    assert "forward" in SUBCOMMANDS
    with pytest.raises(SystemExit):
        build_parser().parse_args(["reconstruct"])


@pytest.mark.asyncio
async def test_main_rejects_invalid_config(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[sobolev]\nm = 1.0\n")
    assert await main(["forward", "--config", str(path), "--output", str(tmp_path)]) == 2


@pytest.mark.asyncio
async def test_main_runs_forward(tmp_path, monkeypatch):
    monkeypatch.delenv("VSC_LAB_CACHE", raising=False)
    monkeypatch.setattr(config_module, "_config", None)
    path = tmp_path / "run.toml"
    path.write_text("[lattice]\nmax_degree = 2\n\n[solver]\ngrid_size = 16\n\n[data]\nn_sources = 6\nphantom = \"zero\"\n")
    out = tmp_path / "runs"
    assert await main(["forward", "--config", str(path), "--output", str(out)]) == 0
    manifests = list(out.glob("*/manifest.json"))
    assert len(manifests) == 1
    assert json.loads(manifests[0].read_text())["subcommand"] == "forward"
