from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from cfarey.ring import make_ring

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report_line():
    """Record one pass/fail line; all lines are echoed in the terminal summary."""

    def add(line: str) -> None:
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def zi():
    return make_ring(-4)


@pytest.fixture(scope="session")
def zj():
    return make_ring(-3)
