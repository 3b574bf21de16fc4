import pytest

from sgrwr.envs import load_g0

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def g0():
    return load_g0()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
