# services/ledger_service.py

"""
Service for recording laboratory runs in the optional ledger database.
"""

from sqlalchemy.orm import Session
from models.run_record import RunRecord, RunKind, RunStatus
import logging
import json
import time
from typing import Optional, Dict, Any

logger = logging.getLogger("ledger_service")


class LedgerService:
    """Service for logging runs to the ledger"""

    @staticmethod
    def log_run(
        db: Session,
        kind: RunKind,
        instance_name: Optional[str],
        seed: Optional[int],
        engine: Optional[str],
        elapsed_ms: float,
        details: Optional[Dict[str, Any]] = None
    ) -> RunRecord:
        """Log a successful run"""
        try:
            record = RunRecord(
                run_kind=kind,
                run_status=RunStatus.SUCCESS,
                instance_name=instance_name,
                seed=seed,
                engine=engine,
                details=json.dumps(details, sort_keys=True) if details else None,
                elapsed_ms=elapsed_ms
            )
            db.add(record)
            db.commit()

            logger.info(f"Logged {kind.value} run for {instance_name} ({elapsed_ms:.1f}ms)")
            return record

        except Exception as e:
            logger.error(f"Failed to log run: {e}")
            db.rollback()
            raise

    @staticmethod
    def log_failure(
        db: Session,
        kind: RunKind,
        exit_code: int,
        error_message: str,
        instance_name: Optional[str] = None,
        seed: Optional[int] = None,
        elapsed_ms: Optional[float] = None
    ) -> RunRecord:
        """Log a run that ended with a nonzero exit code"""
        try:
            record = RunRecord(
                run_kind=kind,
                run_status=RunStatus.from_exit_code(exit_code),
                instance_name=instance_name,
                seed=seed,
                error_message=error_message,
                elapsed_ms=elapsed_ms
            )
            db.add(record)
            db.commit()

            logger.error(f"Logged failed {kind.value} run: {error_message}")
            return record

        except Exception as e:
            logger.error(f"Failed to log run failure: {e}")
            db.rollback()
            raise


class RunTimer:
    """Context manager for timing runs"""

    def __init__(self):
        self.start_time = None
        self.end_time = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_time = time.perf_counter()

    @property
    def elapsed_ms(self) -> float:
        """Get elapsed time in milliseconds"""
        if self.start_time is not None and self.end_time is not None:
            return (self.end_time - self.start_time) * 1000
        return 0.0
