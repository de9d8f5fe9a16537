import numpy as np
import pytest

from decolab.model import SystemParams

from _report import LINES as ACCEPTANCE_LINES



@pytest.fixture
def post():
    return SystemParams(beta=6.0, a_delta=0.02, dq=1.3)


@pytest.fixture
def pre():
    return SystemParams(beta=6.0, a_delta=0.002, dq=1.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
