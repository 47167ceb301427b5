import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bandit_lab.sim_engine import builtin_scenarios  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def scenarios():
    return builtin_scenarios()


@pytest.fixture(scope="session")
def s1(scenarios):
    return scenarios["S1"]


@pytest.fixture(scope="session")
def s2(scenarios):
    return scenarios["S2"]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
