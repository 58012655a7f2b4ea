import numpy as np
import pytest

from trunc_fem.simplex import Simplex, bary_frame
from trunc_fem.verify import random_simplex

REF_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_TET = np.vstack([np.zeros(3), np.eye(3)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ref_triangle():
    return bary_frame(Simplex(REF_TRIANGLE))


@pytest.fixture
def ref_tet():
    return bary_frame(Simplex(REF_TET))


def random_frame(rng, d):
    return bary_frame(random_simplex(rng, d))


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
