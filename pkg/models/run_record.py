# models/run_record.py

"""
Model for the run ledger: one row per command-line invocation.
"""

from sqlalchemy import Column, Integer, String, DateTime, Text, Enum, Float
from sqlalchemy.sql import func
from database import Base
import enum


class RunKind(enum.Enum):
    """Subcommands that produce ledger rows"""
    CERTIFY = "certify"
    PHI = "phi"
    KERNELS = "kernels"
    FLOW = "flow"
    DIST = "dist"
    SPECTRUM = "spectrum"
    DEFICIT = "deficit"
    REPORT = "report"


class RunStatus(enum.Enum):
    """Outcome of a run, aligned with the process exit codes"""
    SUCCESS = "success"
    ARGUMENT_ERROR = "argument_error"
    COMPUTATION_ERROR = "computation_error"
    PROPERTY_VIOLATION = "property_violation"

    @classmethod
    def from_exit_code(cls, code: int) -> "RunStatus":
        return {
            0: cls.SUCCESS,
            1: cls.ARGUMENT_ERROR,
            2: cls.COMPUTATION_ERROR,
            3: cls.PROPERTY_VIOLATION,
        }.get(code, cls.COMPUTATION_ERROR)


class RunRecord(Base):
    """A single laboratory run"""
    __tablename__ = 'run_records'

    id = Column(Integer, primary_key=True)
    run_kind = Column(Enum(RunKind), nullable=False)
    run_status = Column(Enum(RunStatus), nullable=False)
    instance_name = Column(String, nullable=True)
    seed = Column(Integer, nullable=True)
    engine = Column(String, nullable=True)

    # Run details
    details = Column(Text, nullable=True)  # JSON summary record
    error_message = Column(Text, nullable=True)

    elapsed_ms = Column(Float, nullable=True)

    created_at = Column(DateTime(timezone=True), server_default=func.now())
