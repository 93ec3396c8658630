from functools import lru_cache

import pytest

from frostproj.sticks import build_arrangement

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def cached_arrangement(t: float, k: int):
    return build_arrangement(2.0 ** -k, t)


@pytest.fixture(scope="session")
def arrangement():
    return cached_arrangement


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
