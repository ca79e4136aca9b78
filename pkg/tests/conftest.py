import numpy as np
import pytest

from loja_lab.models import (AllenCahnModel, RevolutionModel, mass_constraint,
                             revolution_volume_constraint)
from loja_lab.numerics import Grid1D

ACCEPTANCE_LINES = []


def record_acceptance(line):
    """Lines printed again in the terminal summary so they show without -s."""
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid():
    return Grid1D(0.0, 1.0, 199)


@pytest.fixture
def small_grid():
    return Grid1D(0.0, 1.0, 49)


@pytest.fixture
def cylinder(grid):
    return RevolutionModel(grid), revolution_volume_constraint(grid, np.pi)


@pytest.fixture
def small_cylinder(small_grid):
    return RevolutionModel(small_grid), revolution_volume_constraint(small_grid, np.pi)


@pytest.fixture
def allen_cahn(grid):
    return AllenCahnModel(grid), mass_constraint(grid)


@pytest.fixture
def small_allen_cahn(small_grid):
    return AllenCahnModel(small_grid), mass_constraint(small_grid)
