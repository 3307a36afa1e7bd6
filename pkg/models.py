"""
Database models for the run ledger
"""
from datetime import datetime
from typing import Optional, List
from sqlalchemy import String, Text, DateTime, Integer, ForeignKey, JSON
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    """Base class for all models"""
    pass


class RunRecord(Base):
    """One invocation of solve, numbers or verify"""
    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(primary_key=True)
    command: Mapped[str] = mapped_column(String(50), index=True)  # 'solve', 'numbers', 'verify'
    status: Mapped[str] = mapped_column(String(50))  # 'running', 'success', 'failed', 'error'

    # Truncation and command parameters
    r: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    times: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    degree: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    parameters: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)

    # Output
    output_path: Mapped[Optional[str]] = mapped_column(String(1000), nullable=True)
    summary: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)

    # Error tracking
    error_message: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    # Timing
    started_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow, index=True)
    completed_at: Mapped[Optional[datetime]] = mapped_column(DateTime, nullable=True)
    duration_ms: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)

    # Relationships
    checks: Mapped[List["CheckRecord"]] = relationship(back_populates="run", cascade="all, delete-orphan")

    def __repr__(self) -> str:
        return f"<RunRecord(id={self.id}, command='{self.command}', status='{self.status}')>"


class CheckRecord(Base):
    """Outcome of one check within a verify run"""
    __tablename__ = "check_results"

    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("runs.id"), index=True)

    check: Mapped[str] = mapped_column(String(50))
    status: Mapped[str] = mapped_column(String(20))  # 'pass', 'fail', 'skipped'
    params: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)
    residual_count: Mapped[int] = mapped_column(Integer, default=0)
    millis: Mapped[int] = mapped_column(Integer, default=0)
    note: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    # Relationships
    run: Mapped["RunRecord"] = relationship(back_populates="checks")

    def __repr__(self) -> str:
        return f"<CheckRecord(id={self.id}, check='{self.check}', status='{self.status}')>"
