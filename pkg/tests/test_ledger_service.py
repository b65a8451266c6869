# tests/test_ledger_service.py

import json

import pytest

from database import make_session_factory
from models.run_record import RunKind, RunRecord, RunStatus
from services.ledger_service import LedgerService, RunTimer


@pytest.fixture
def db(tmp_path):
    session = make_session_factory(f"sqlite:///{tmp_path / 'ledger.db'}")()
    yield session
    session.close()


def test_log_run(db):
    LedgerService.log_run(db, RunKind.PHI, "rs111", 7, "exact", 12.5, {"value": 0.75})
    record = db.query(RunRecord).one()
    assert record.run_status == RunStatus.SUCCESS
    assert record.engine == "exact"
    assert json.loads(record.details) == {"value": 0.75}


def test_log_failure_maps_exit_code(db):
    LedgerService.log_failure(db, RunKind.DEFICIT, 3, "deficit negative", instance_name="rs2d")
    record = db.query(RunRecord).one()
    assert record.run_status == RunStatus.PROPERTY_VIOLATION
    assert record.error_message == "deficit negative"


def test_unknown_exit_code_is_computation_error():
    assert RunStatus.from_exit_code(9) == RunStatus.COMPUTATION_ERROR


def test_timer():
    timer = RunTimer()
    assert timer.elapsed_ms == 0.0
    with timer:
        sum(range(1000))
    assert timer.elapsed_ms >= 0.0
