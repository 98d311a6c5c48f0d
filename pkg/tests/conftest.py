"""Shared fixtures and the acceptance-criteria summary section."""

import pytest

from critnls.ground_state import shooting_oracle, solve_petviashvili

_criterion_lines = []


def record_criterion(line):
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def ground_pet():
    """Ground state from Petviashvili iteration on the default grid."""
    return solve_petviashvili()


@pytest.fixture(scope="session")
def ground_shoot():
    """Ground state from the independent radial shooting oracle."""
    return shooting_oracle()
