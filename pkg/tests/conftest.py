import pytest

from roundtaylor.pipeline import Proof

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def proof():
    """One full proof, shared by every test that needs pipeline stages."""
    p = Proof()
    p.report("full")
    return p


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
