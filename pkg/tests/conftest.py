import pytest

from selftrap import standard_params

#: acceptance results collected by tests/test_acceptance.py:
#: list of (criterion, status, detail)
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return standard_params()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_LINES:
        tw.write_line(f"{status:<26} {name}: {detail}")
