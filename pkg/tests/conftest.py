import numpy as np
import pytest
from hypothesis import settings

from netpred.data import center_continuous
from synth import mixed_dataset

ACCEPTANCE_LINES = []

# fixed example generation keeps runs reproducible
settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mixed():
    return center_continuous(mixed_dataset())


@pytest.fixture
def acceptance():
    """Record and print one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record


@pytest.fixture
def acceptance_skip():
    def skip(number, reason):
        line = f"[SKIP] criterion {number}: {reason}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        pytest.skip(reason)

    return skip
