import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from horseshoe_ifs.config import PRESETS  # noqa: E402


@pytest.fixture(scope="session")
def default_params():
    return PRESETS["default-validated"]


@pytest.fixture(scope="session")
def equal_params():
    return PRESETS["equal-beta"]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
