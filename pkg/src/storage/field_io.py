"""Binary formats for contrast fields and scattering data."""

import json
import struct
from typing import Dict

import fsspec
import numpy as np

from ..core.errors import FormatError
from ..forward.scatter_data import ScatterData
from ..forward.sphere import SpherePoints
from ..spectral.lattice import ContrastField, Lattice


FORMAT_VERSION = 1
FIELD_MAGIC = b"VSCLAB-FIELD\x00\x00"
DATA_MAGIC = b"VSCLAB-SDATA\x00\x00"
HEADER_SIZE = 16

# Near-field data are integrated against the product surface measure without normalization
DATA_MEASURE = "product surface measure, unnormalized"


def _header(magic: bytes) -> bytes:
    return magic + struct.pack("<H", FORMAT_VERSION)


def _check_header(blob: bytes, magic: bytes, what: str) -> None:
    if len(blob) < HEADER_SIZE:
        raise FormatError(f"{what} payload is shorter than its {HEADER_SIZE}-byte header")
    if blob[: len(magic)] != magic:
        raise FormatError(f"bad magic for {what}")
    (version,) = struct.unpack("<H", blob[len(magic) : HEADER_SIZE])
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported {what} format version {version}")


def field_to_bytes(f: ContrastField) -> bytes:
    """Header, int32 N, int32 grid_size, then (re, im) little-endian doubles in lexicographic gamma order."""
    body = struct.pack("<ii", f.lattice.max_degree, f.lattice.grid_size)
    coeffs = np.ascontiguousarray(f.coeffs, dtype="<c16")
    return _header(FIELD_MAGIC) + body + coeffs.tobytes()


def field_from_bytes(blob: bytes) -> ContrastField:
    _check_header(blob, FIELD_MAGIC, "field")
    if len(blob) < HEADER_SIZE + 8:
        raise FormatError("field payload ends inside the lattice header")
    N, G = struct.unpack("<ii", blob[HEADER_SIZE : HEADER_SIZE + 8])
    try:
        lattice = Lattice(max_degree=N, grid_size=G)
    except ValueError as e:
        raise FormatError(f"invalid lattice in field header: {e}") from e
    expected = HEADER_SIZE + 8 + 16 * lattice.width ** 3
    if len(blob) != expected:
        raise FormatError(f"field payload has {len(blob)} bytes, expected {expected}")
    coeffs = np.frombuffer(blob, dtype="<c16", offset=HEADER_SIZE + 8).reshape(lattice.shape)
    return ContrastField.from_coefficients(coeffs.astype(complex), lattice)


def save_field(f: ContrastField, path: str) -> None:
    with fsspec.open(path, "wb") as fh:
        fh.write(field_to_bytes(f))


def load_field(path: str) -> ContrastField:
    with fsspec.open(path, "rb") as fh:
        return field_from_bytes(fh.read())


def _points_json(points: SpherePoints) -> Dict:
    return {
        "radius": points.radius,
        "scheme": points.scheme,
        "points": points.points.tolist(),
        "weights": points.weights.tolist(),
    }


def _points_from_json(entry: Dict) -> SpherePoints:
    return SpherePoints(
        points=np.asarray(entry["points"], dtype=float).reshape(-1, 3),
        weights=np.asarray(entry["weights"], dtype=float),
        radius=float(entry["radius"]),
        scheme=str(entry["scheme"]),
    )


def data_to_bytes(data: ScatterData) -> bytes:
    """Header, uint32 JSON length, JSON (kind, kappa, R, point sets, weights), then the values as little-endian complex doubles."""
    meta = {
        "kind": data.kind,
        "kappa": data.kappa,
        "R": data.radius,
        "measure": DATA_MEASURE,
        "shape": list(data.values.shape),
        "sources": _points_json(data.sources),
        "receivers": _points_json(data.receivers),
    }
    text = json.dumps(meta, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(data.values, dtype="<c16").tobytes()
    return _header(DATA_MAGIC) + struct.pack("<I", len(text)) + text + payload


def data_from_bytes(blob: bytes) -> ScatterData:
    _check_header(blob, DATA_MAGIC, "scatter data")
    if len(blob) < HEADER_SIZE + 4:
        raise FormatError("scatter data ends inside the JSON length field")
    (n,) = struct.unpack("<I", blob[HEADER_SIZE : HEADER_SIZE + 4])
    start = HEADER_SIZE + 4
    try:
        meta = json.loads(blob[start : start + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"unreadable scatter data header: {e}") from e
    rows, cols = meta["shape"]
    expected = start + n + 16 * rows * cols
    if len(blob) != expected:
        raise FormatError(f"scatter data has {len(blob)} bytes, expected {expected}")
    values = np.frombuffer(blob, dtype="<c16", offset=start + n).reshape(rows, cols).astype(complex)
    return ScatterData(
        kind=meta["kind"],
        kappa=float(meta["kappa"]),
        sources=_points_from_json(meta["sources"]),
        receivers=_points_from_json(meta["receivers"]),
        values=values,
    )
