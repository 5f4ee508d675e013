"""Storage implementations for run artifacts and the forward-solve cache."""

import json
import os
from typing import Any, Dict, Optional, Tuple

import fsspec
import sqlalchemy as sa
import structlog
from sqlalchemy import create_engine
from sqlalchemy.future import select
from sqlalchemy.orm import sessionmaker

from ..core.interfaces import ArtifactRecord, IArtifactStorage, ICacheStorage
from ..models.base import Base
from ..models.solve_cache import ForwardSolve
from ..utils.hashing import sha256_bytes


logger = structlog.get_logger(__name__)


class ArtifactStorage(IArtifactStorage):
    """fsspec-backed writer for the files of one run."""

    def __init__(self, root: str):
        """
        Initialize the ArtifactStorage.

        Args:
            root: Local directory or fsspec URL of the run directory
        """
        self._root = str(root).rstrip("/")
        self._fs, self._base = fsspec.core.url_to_fs(self._root)
        self._fs.makedirs(self._base, exist_ok=True)
        self.records: Dict[str, ArtifactRecord] = {}

    @property
    def root(self) -> str:
        return self._root

    def path_for(self, name: str) -> str:
        return f"{self._base}/{name}"

    def write_bytes(self, name: str, data: bytes) -> ArtifactRecord:
        """
        Write raw bytes below the run directory.

        Args:
            name: Relative file name
            data: Content

        Returns:
            Record with path, sha256 and size
        """
        path = self.path_for(name)
        parent = os.path.dirname(path)
        if parent:
            self._fs.makedirs(parent, exist_ok=True)
        with self._fs.open(path, "wb") as fh:
            fh.write(data)
        record = ArtifactRecord(path=name, sha256=sha256_bytes(data), size=len(data))
        self.records[name] = record
        logger.debug(f"wrote {name} ({len(data)} bytes)")
        return record

    def write_text(self, name: str, text: str) -> ArtifactRecord:
        return self.write_bytes(name, text.encode("utf-8"))

    def write_json(self, name: str, payload: Any) -> ArtifactRecord:
        if hasattr(payload, "model_dump"):
            payload = payload.model_dump(mode="json")
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")

    def read_bytes(self, name: str) -> bytes:
        with self._fs.open(self.path_for(name), "rb") as fh:
            return fh.read()


class CacheStorage(ICacheStorage):
    """SQLite cache of forward-solve data keyed by content hashes."""

    def __init__(self, database_url: str):
        """
        Initialize the CacheStorage.

        Args:
            database_url: SQLAlchemy database URL, or a plain file path for SQLite
        """
        if "://" not in database_url:
            database_url = f"sqlite:///{database_url}"
        self._engine = create_engine(database_url, connect_args={"check_same_thread": False})
        Base.metadata.create_all(self._engine)
        self._session_factory = sessionmaker(self._engine, expire_on_commit=False)

    def get(self, field_hash: str, incidence_key: str, config_hash: str) -> Optional[Tuple[Tuple[int, ...], bytes]]:
        with self._session_factory() as session:
            query = select(ForwardSolve).where(
                ForwardSolve.field_hash == field_hash,
                ForwardSolve.incidence_key == incidence_key,
                ForwardSolve.config_hash == config_hash,
            )
            entry = session.execute(query).scalar_one_or_none()
            if entry is None:
                return None
            return (entry.rows, entry.cols), bytes(entry.payload)

    def put(
        self, field_hash: str, incidence_key: str, config_hash: str, shape: Tuple[int, ...], payload: bytes
    ) -> bool:
        with self._session_factory() as session:
            try:
                session.add(
                    ForwardSolve(
                        field_hash=field_hash,
                        incidence_key=incidence_key,
                        config_hash=config_hash,
                        rows=int(shape[0]),
                        cols=int(shape[1]),
                        payload=payload,
                    )
                )
                session.commit()
                return True
            except sa.exc.IntegrityError:
                # concurrent writers of the same key
                session.rollback()
                return False

    def count(self) -> int:
        with self._session_factory() as session:
            return int(session.execute(sa.select(sa.func.count()).select_from(ForwardSolve)).scalar_one())

    def close(self) -> None:
        self._engine.dispose()
