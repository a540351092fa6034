from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path

import pytest

from revmine.embedding import load_store
from revmine.ingest import KeystrokeEvent, SubmissionEntry

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def topic_store():
    return load_store(DATA / "topic_vectors50.txt", 50)


def make_entry(text: str = "", keys=(), user: str = "u1", minute: int = 0) -> SubmissionEntry:
    return SubmissionEntry(user, datetime(2023, 1, 1, 12, 0) + timedelta(minutes=minute), tuple(keys), text)


def typed(n_chars: int, n_back: int = 0, start: int = 0, step: int = 100) -> list[KeystrokeEvent]:
    """n_chars character presses then n_back backspaces, ``step`` ms apart."""
    events = [KeystrokeEvent.char("x", start + i * step) for i in range(n_chars)]
    t0 = start + n_chars * step
    events += [KeystrokeEvent.backspace(t0 + i * step) for i in range(n_back)]
    return events


# acceptance criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
