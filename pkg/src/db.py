"""Forward-solve cache initialization."""

from typing import Optional

from src.config import get_config
from src.storage.storage_impl import CacheStorage


def cache_url() -> Optional[str]:
    """SQLAlchemy URL of the cache, or None when caching is disabled."""
    path = get_config().get("cache_path")
    if not path:
        return None
    return path if "://" in path else f"sqlite:///{path}"


def get_cache() -> Optional[CacheStorage]:
    """Open the cache named by VSC_LAB_CACHE.

    Returns:
        CacheStorage: The cache, or None when VSC_LAB_CACHE is unset
    """
    url = cache_url()
    return CacheStorage(url) if url else None
