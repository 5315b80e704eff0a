import os

# the ledger engine is built at import time, so point it at memory first
os.environ["LAB_DATABASE_URL"] = "sqlite://"
os.environ.setdefault("LAB_RECORD_RUNS", "true")
os.environ.setdefault("LAB_LOG_LEVEL", "WARNING")

import pytest  # noqa: E402

import network  # noqa: E402
from config import reload_settings  # noqa: E402
from database import get_db, init_db  # noqa: E402
from schemas import PenaltyEnergies  # noqa: E402


@pytest.fixture
def energies():
    return PenaltyEnergies()


@pytest.fixture
def distinct_energies():
    return PenaltyEnergies(e_a=1.0, e_b=2.0, e_c=3.0, e_d=4.0)


@pytest.fixture
def not_gate_net():
    return network.not_gate_network()


@pytest.fixture
def chain():
    return network.not_chain


@pytest.fixture
def db_session():
    init_db()
    yield from get_db()


@pytest.fixture
def settings_env(monkeypatch):
    """Patch LAB_* variables; settings are re-read on entry and restored on exit."""
    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(key, value)
        return reload_settings()

    yield apply
    monkeypatch.undo()
    reload_settings()
