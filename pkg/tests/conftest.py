import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def qr_golden():
    return json.loads((FIXTURES / "qr_golden.json").read_text())["symbols"]


@pytest.fixture(scope="session")
def aztec_golden():
    return json.loads((FIXTURES / "aztec_golden.json").read_text())["symbols"]


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance():
    """Criterion number -> (passed, detail); printed at the end of the run."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in range(1, 9):
        status, detail = ACCEPTANCE.get(key, ("NOT RUN", "skipped or deselected"))
        terminalreporter.write_line(f"criterion {key}: {status} - {detail}")
