import numpy as np
import pytest

from heisenlab.grid import GridSpec
from heisenlab.suite import balanced_length

#: one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def grid_for(N: int, n: int = 1) -> GridSpec:
    return GridSpec(n, N, balanced_length(N))


@pytest.fixture
def grid64():
    return grid_for(64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_matrix(rng, D):
    return rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
