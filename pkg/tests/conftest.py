import warnings

import pytest

from propleak.data import ResampleWarning

# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA_LINES: dict[int, str] = {}


@pytest.fixture(autouse=True)
def _quiet_resampling():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResampleWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA_LINES):
        terminalreporter.write_line(CRITERIA_LINES[n])
