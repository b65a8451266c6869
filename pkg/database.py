"""
Database configuration for the run ledger.

The ledger is optional: it is only created when RBLL_LEDGER_URL is set, and
nothing it stores feeds back into numeric results.
"""

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Create base class for models
Base = declarative_base()

_factories = {}


def make_session_factory(url: str):
    """Create (once per URL) the engine, its tables and a session factory"""
    if url not in _factories:
        engine = create_engine(url)
        Base.metadata.create_all(bind=engine)
        _factories[url] = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return _factories[url]


# Generator yielding a ledger session
def get_db(url: str):
    db = make_session_factory(url)()
    try:
        yield db
    finally:
        db.close()
