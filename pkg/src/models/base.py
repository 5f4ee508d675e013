"""Base class for SQLAlchemy models."""

from sqlalchemy.orm import declarative_base

# Declarative base shared by the cache tables
Base = declarative_base()
