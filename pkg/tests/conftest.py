import sqlite3
from pathlib import Path

import pytest

from pathsql.bench import SqliteExecutor
from pathsql.cdd import load_cdd, setup_script

HERE = Path(__file__).parent
GOLDENS = HERE / "goldens"
TRANSCRIPTS = HERE / "transcripts"


@pytest.fixture(scope="session")
def cdd_model():
    model, _, _ = load_cdd()
    return model


@pytest.fixture(scope="session")
def cdd_questions():
    _, _, questions = load_cdd()
    return {q["name"]: q for q in questions}


@pytest.fixture()
def cdd_executor():
    executor = SqliteExecutor.in_memory(setup_script())
    yield executor
    executor.conn.close()


@pytest.fixture()
def no_network(monkeypatch):
    """Fail the test if anything opens a socket."""
    import socket

    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted during a mock-only test")

    monkeypatch.setattr(socket.socket, "connect", refuse)
