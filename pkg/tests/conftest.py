import functools

import pytest

from codedshuffle import harness

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_worst_case(scheme, n, d, seed=0):
    """Exhaustive searches are the slow part of the suite; share them."""
    return harness.worst_case_search(scheme, n, d, seed=seed, keep_rates=True)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
