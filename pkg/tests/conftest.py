import numpy as np
import pytest

from aqgsim.grid import GridSpec
from aqgsim.operators import DissipParams


@pytest.fixture
def grid32():
    return GridSpec(32, 32)


@pytest.fixture
def grid64():
    return GridSpec(64, 64)


@pytest.fixture
def params():
    return DissipParams(0.75, 0.6, mu=1.0, nu=1.0, s=1.2)


@pytest.fixture
def params_sym():
    return DissipParams(0.75, 0.75, mu=1.0, nu=1.0, s=1.0)


def random_real_grid(grid, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape)
    return v - v.mean()
