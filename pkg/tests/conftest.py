import numpy as np
import pytest

import tci

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ctx():
    c = tci.create_context(verbose=0)
    yield c
    if c.alive:
        tci.destroy_context(c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
