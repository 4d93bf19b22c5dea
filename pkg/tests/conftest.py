import numpy as np
import pytest

from rblab.flux import make_burgers, make_logcosh
from rblab.grid import InitialDatum


@pytest.fixture
def burgers():
    return make_burgers()


@pytest.fixture
def logcosh1():
    return make_logcosh(1.0)


@pytest.fixture
def gaussian():
    return InitialDatum("gaussian", 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance verdict lines, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
