"""Storage components: run artifacts, binary formats and the forward-solve cache."""

from .field_io import data_from_bytes, data_to_bytes, field_from_bytes, field_to_bytes, load_field, save_field
from .storage_impl import ArtifactStorage, CacheStorage

__all__ = [
    "ArtifactStorage",
    "CacheStorage",
    "data_from_bytes",
    "data_to_bytes",
    "field_from_bytes",
    "field_to_bytes",
    "load_field",
    "save_field",
]
