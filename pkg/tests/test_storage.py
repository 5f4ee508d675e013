import json

import numpy as np
import pytest

from src.core.errors import FormatError
from src.storage.field_io import (
    FIELD_MAGIC,
    HEADER_SIZE,
    data_from_bytes,
    data_to_bytes,
    field_from_bytes,
    field_to_bytes,
    load_field,
    save_field,
)
from src.storage.storage_impl import ArtifactStorage, CacheStorage
from src.spectral.phantoms import random_band_limited
from src.utils.hashing import array_hash, config_hash, field_hash, sha256_bytes


def test_field_bytes_preserve_coefficients(lattice):
    f = random_band_limited(lattice, seed=7)
    blob = field_to_bytes(f)
    assert blob.startswith(FIELD_MAGIC)
    assert len(blob) == HEADER_SIZE + 8 + 16 * 125
    restored = field_from_bytes(blob)
    assert restored.lattice == f.lattice
    assert np.array_equal(restored.coeffs, f.coeffs), "coefficients should be bit-identical"
    assert field_hash(restored) == field_hash(f)


def test_field_bytes_reject_corruption(lattice):
    blob = field_to_bytes(random_band_limited(lattice, seed=1))
    with pytest.raises(FormatError, match="magic"):
        field_from_bytes(b"X" + blob[1:])
    with pytest.raises(FormatError):
        field_from_bytes(blob[:-16])
    with pytest.raises(FormatError, match="version"):
        field_from_bytes(blob[: len(FIELD_MAGIC)] + b"\x09\x00" + blob[HEADER_SIZE:])
    with pytest.raises(FormatError):
        field_from_bytes(blob[:10])


def test_data_bytes_preserve_values_and_geometry(far_operator):
    rng = np.random.default_rng(0)
    values = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    data = far_operator.wrap(values)
    restored = data_from_bytes(data_to_bytes(data))
    assert restored.kind == "far_field"
    assert np.array_equal(restored.values, data.values)
    assert restored.compatible(data), "point sets and weights should survive serialization"


def test_data_bytes_reject_truncation(far_operator):
    blob = data_to_bytes(far_operator.wrap(np.zeros((8, 8))))
    with pytest.raises(FormatError):
        data_from_bytes(blob[:-1])
    with pytest.raises(FormatError, match="magic"):
        data_from_bytes(field_to_bytes(random_band_limited(_small_lattice(), seed=0)))


def _small_lattice():
    from src.spectral.lattice import Lattice

    return Lattice(max_degree=1)


def test_save_and_load_through_fsspec(lattice):
    f = random_band_limited(lattice, seed=2)
    save_field(f, "memory://vsclab-tests/field.bin")
    assert np.array_equal(load_field("memory://vsclab-tests/field.bin").coeffs, f.coeffs)


def test_artifact_storage_records_hashes(tmp_path):
    storage = ArtifactStorage(str(tmp_path / "run"))
    record = storage.write_text("sub/notes.txt", "hello\n")
    assert record.sha256 == sha256_bytes(b"hello\n")
    assert record.size == 6
    assert (tmp_path / "run" / "sub" / "notes.txt").read_text() == "hello\n"

    storage.write_json("summary.json", {"b": 1, "a": 2})
    assert json.loads(storage.read_bytes("summary.json")) == {"a": 2, "b": 1}
    assert set(storage.records) == {"sub/notes.txt", "summary.json"}


def test_cache_storage_put_get(tmp_path):
    cache = CacheStorage(str(tmp_path / "cache.sqlite"))
    try:
        assert cache.get("f", "inc", "cfg") is None
        payload = np.arange(6, dtype="<c16").tobytes()
        assert cache.put("f", "inc", "cfg", (2, 3), payload)
        assert not cache.put("f", "inc", "cfg", (2, 3), payload), "duplicate keys should be rejected"
        assert cache.get("f", "inc", "cfg") == ((2, 3), payload)
        assert cache.count() == 1
    finally:
        cache.close()


def test_operator_uses_cache(tmp_path, mocker, bump, solver_cfg):
    from src.forward.operators import NearFieldOperator

    cache = CacheStorage(str(tmp_path / "cache.sqlite"))
    try:
        op = NearFieldOperator.create(solver_cfg, 8, cache=cache)
        first = op.evaluate(bump)
        spy = mocker.spy(op, "states")
        second = op.evaluate(bump)
        assert spy.call_count == 0, "a cached contrast should not be solved again"
        assert np.array_equal(first.values, second.values)
        assert cache.count() == 1
    finally:
        cache.close()


def test_hashes_are_stable(lattice, solver_cfg):
    a = np.arange(4.0)
    assert array_hash(a) == array_hash(a.copy())
    assert array_hash(a) != array_hash(a.astype(np.float32))
    assert config_hash(solver_cfg) == config_hash(solver_cfg.model_dump(mode="json"))
    assert field_hash(random_band_limited(lattice, 0)) != field_hash(random_band_limited(lattice, 1))
