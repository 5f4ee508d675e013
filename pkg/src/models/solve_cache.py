"""SQLAlchemy model for memoized forward solves."""

from sqlalchemy import Column, DateTime, Integer, LargeBinary, String, UniqueConstraint
from sqlalchemy.sql import func

from .base import Base


class ForwardSolve(Base):
    """Data matrix of one (contrast, incidence configuration, solver configuration) triple."""

    __tablename__ = "forward_solves"
    __table_args__ = (UniqueConstraint("field_hash", "incidence_key", "config_hash", name="uq_forward_solve"),)

    id = Column(Integer, primary_key=True, autoincrement=True)
    field_hash = Column(String(64), nullable=False, index=True)
    incidence_key = Column(String(200), nullable=False)
    config_hash = Column(String(64), nullable=False)

    rows = Column(Integer, nullable=False)
    cols = Column(Integer, nullable=False)
    # little-endian complex128 values, row-major
    payload = Column(LargeBinary, nullable=False)

    stored_at = Column(DateTime, server_default=func.now())

    def __repr__(self):
        return f"<ForwardSolve(field='{self.field_hash[:12]}', shape=({self.rows}, {self.cols}))>"
