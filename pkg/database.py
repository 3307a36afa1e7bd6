"""
Database operations and connection management for the run ledger
"""
from contextlib import contextmanager
from datetime import datetime
from typing import Any, Dict, Generator, Iterable, List, Optional

from sqlalchemy import create_engine, select, func
from sqlalchemy.orm import sessionmaker, Session
from sqlalchemy.exc import SQLAlchemyError

from config import settings
from logger import setup_logger
from models import Base, RunRecord, CheckRecord

logger = setup_logger(__name__)


class Database:
    """Database manager class"""

    def __init__(self, database_url: Optional[str] = None):
        """
        Initialize database connection

        Args:
            database_url: Database connection URL (uses settings if not provided)
        """
        self.database_url = database_url or settings.final_database_url

        self.engine = create_engine(
            self.database_url,
            echo=False,
            pool_pre_ping=True
        )

        self.SessionLocal = sessionmaker(
            autocommit=False,
            autoflush=False,
            expire_on_commit=False,  # Keep objects usable after commit
            bind=self.engine
        )

        logger.debug(f"Database initialized: {self.database_url}")

    def create_tables(self):
        """Create all tables"""
        try:
            Base.metadata.create_all(bind=self.engine)
            logger.debug("Database tables created successfully")
        except SQLAlchemyError as e:
            logger.error(f"Failed to create tables: {e}")
            raise

    @contextmanager
    def get_session(self) -> Generator[Session, None, None]:
        """
        Get database session context manager

        Yields:
            Database session
        """
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"Database session error: {e}")
            raise
        finally:
            session.close()

    # Run operations
    def create_run(self, command: str, parameters: Optional[Dict[str, Any]] = None) -> RunRecord:
        """Create a run record in the 'running' state"""
        parameters = parameters or {}
        with self.get_session() as session:
            run = RunRecord(
                command=command,
                status="running",
                r=parameters.get("r"),
                times=parameters.get("times"),
                degree=parameters.get("degree"),
                parameters=parameters,
            )
            session.add(run)
            session.flush()
            session.refresh(run)
            logger.debug(f"Created run record {run.id} for {command}")
            return run

    def update_run(self, run_id: int, **kwargs) -> Optional[RunRecord]:
        """Update a run record; completing it fills in the duration"""
        with self.get_session() as session:
            run = session.get(RunRecord, run_id)
            if run:
                for key, value in kwargs.items():
                    if hasattr(run, key):
                        setattr(run, key, value)

                if kwargs.get('completed_at'):
                    duration = (kwargs['completed_at'] - run.started_at).total_seconds()
                    run.duration_ms = int(duration * 1000)

                session.flush()
                session.refresh(run)
            return run

    def finish_run(self, run_id: int, status: str, **kwargs) -> Optional[RunRecord]:
        return self.update_run(run_id, status=status, completed_at=datetime.utcnow(), **kwargs)

    def get_run(self, run_id: int) -> Optional[RunRecord]:
        with self.get_session() as session:
            return session.get(RunRecord, run_id)

    def get_recent_runs(self, limit: int = 20, command: Optional[str] = None) -> List[RunRecord]:
        """Most recent runs first"""
        with self.get_session() as session:
            stmt = select(RunRecord)
            if command:
                stmt = stmt.where(RunRecord.command == command)
            stmt = stmt.order_by(RunRecord.started_at.desc(), RunRecord.id.desc()).limit(limit)
            return list(session.scalars(stmt).all())

    # Check operations
    def add_check_results(self, run_id: int, reports: Iterable[Any]) -> int:
        """
        Store check outcomes for a run

        Args:
            run_id: Owning run
            reports: CheckReport-like objects

        Returns:
            Number of stored records
        """
        count = 0
        with self.get_session() as session:
            for report in reports:
                session.add(CheckRecord(
                    run_id=run_id,
                    check=report.check,
                    status=report.status,
                    params=report.params,
                    residual_count=len(report.residual_monomials),
                    millis=report.millis,
                    note=report.note or None,
                ))
                count += 1
        logger.debug(f"Stored {count} check results for run {run_id}")
        return count

    def get_check_results(self, run_id: int) -> List[CheckRecord]:
        with self.get_session() as session:
            stmt = select(CheckRecord).where(CheckRecord.run_id == run_id).order_by(CheckRecord.id)
            return list(session.scalars(stmt).all())

    # Statistics
    def get_stats(self) -> dict:
        """Get ledger statistics"""
        with self.get_session() as session:
            total_runs = session.scalar(select(func.count()).select_from(RunRecord))
            failed_runs = session.scalar(
                select(func.count()).select_from(RunRecord).where(RunRecord.status.in_(("failed", "error")))
            )
            total_checks = session.scalar(select(func.count()).select_from(CheckRecord))
            failed_checks = session.scalar(
                select(func.count()).select_from(CheckRecord).where(CheckRecord.status == "fail")
            )
            return {
                "total_runs": total_runs,
                "failed_runs": failed_runs,
                "total_checks": total_checks,
                "failed_checks": failed_checks,
            }


# Global database instance
db = Database()
