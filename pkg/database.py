from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, DeclarativeBase
from sqlalchemy.pool import StaticPool

from config import get_settings

SQLALCHEMY_DATABASE_URL = get_settings().database_url


def _make_engine(url: str):
    if url in ("sqlite://", "sqlite:///:memory:"):
        # one shared connection, or every session would see a fresh empty database
        return create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    if url.startswith("sqlite"):
        return create_engine(url, connect_args={"check_same_thread": False})
    return create_engine(url)


engine = _make_engine(SQLALCHEMY_DATABASE_URL)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

class Base(DeclarativeBase):
    pass

def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()

def init_db():
    """Create the ledger tables if they are missing"""
    import models  # noqa: F401  registers the tables on Base
    Base.metadata.create_all(bind=engine)
