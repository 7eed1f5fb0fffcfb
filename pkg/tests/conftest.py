from __future__ import annotations

from pathlib import Path

import hypothesis
import pytest

from netlab.ingest import read_transactions, to_directed_trades

FIXTURES = Path(__file__).parent / "fixtures"

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def g3_trades():
    return to_directed_trades(read_transactions(FIXTURES / "g3.csv").records)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
