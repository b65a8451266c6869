# services/__init__.py
from services.ledger_service import LedgerService, RunTimer
