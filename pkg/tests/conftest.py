import numpy as np
import pytest

from rtmf import plantlib


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def maglev_sys():
    return plantlib.maglev_plant()


@pytest.fixture
def maglev_model():
    return plantlib.maglev_reference_model()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
