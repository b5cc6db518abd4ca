import pytest

from twisting import PENDULUM_GAINS, PENDULUM_TUNING

# criterion id -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def params():
    return PENDULUM_TUNING


@pytest.fixture
def gains():
    return PENDULUM_GAINS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {key}: {detail}")
