import numpy as np
import pytest

from thirdscat import riemann_hilbert as rh
from thirdscat.geometry import XGrid
from thirdscat.potentials import gaussian

REGULAR_POLE = 1.1 * np.exp(1.2j * np.pi)   # with gamma = -1 the soliton is smooth (max|Q| ~ 2.7)
REGULAR_GRID = XGrid(-14.0, 14.0, 2401)


@pytest.fixture(scope="session")
def grid():
    return XGrid()


@pytest.fixture(scope="session")
def gauss():
    return gaussian()


@pytest.fixture(scope="session")
def regular_soliton():
    sol = rh.solve_reflectionless([(REGULAR_POLE, -1.0)], REGULAR_GRID.x)
    return sol, sol.potentials(), REGULAR_GRID


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
