import numpy as np
import pytest

from hjlongtime.fields import ScalarField, make_uniform_grid
from hjlongtime.hamiltonian import HamiltonianSpec


def S(x):
    return 0.5 * x * np.abs(x)


def grid_dx(lo, hi, dx):
    return make_uniform_grid(lo, hi, int(round((hi - lo) / dx)) + 1)


def field(grid, f):
    return ScalarField.from_function(grid, f)


@pytest.fixture
def eik():
    return HamiltonianSpec.eikonal(1.0)
