"""Database models."""

from .base import Base
from .solve_cache import ForwardSolve

__all__ = ["Base", "ForwardSolve"]
