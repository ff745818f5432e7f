import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")

from statdisc.quadric import QuadricModel

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def scalar_quadric():
    return QuadricModel([[[1.0]]])


@pytest.fixture
def diag_quadric():
    """A_1 = I, A_2 = diag(1, -1)."""
    return QuadricModel([np.eye(2), np.diag([1.0, -1.0])])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
