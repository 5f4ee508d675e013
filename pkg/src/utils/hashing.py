"""Content hashes for fields, data and configurations."""

import hashlib
import json
from typing import Any

import numpy as np


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def array_hash(array: np.ndarray) -> str:
    """Hash of dtype, shape and little-endian contents."""
    arr = np.ascontiguousarray(array)
    arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
    digest = hashlib.sha256()
    digest.update(arr.dtype.str.encode())
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()


def field_hash(f) -> str:
    """Hash of a ContrastField's lattice and coefficients."""
    digest = hashlib.sha256()
    digest.update(f"{f.lattice.max_degree}:{f.lattice.grid_size}:{f.support_radius!r}".encode())
    digest.update(array_hash(f.coeffs).encode())
    return digest.hexdigest()


def config_hash(config: Any) -> str:
    """Hash of a pydantic model or JSON-serializable mapping."""
    if hasattr(config, "model_dump"):
        config = config.model_dump(mode="json")
    return sha256_bytes(json.dumps(config, sort_keys=True, default=str).encode())
