import numpy as np
import pytest

from ssb import Field2, SpectralEngine, make_grid


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running simulation test")


@pytest.fixture(scope="session")
def unit_grid():
    """64x64 grid on [0, 2pi)^2, the workhorse for analytic spectral checks."""
    return make_grid(64, 64, 2 * np.pi, 2 * np.pi)


@pytest.fixture(scope="session")
def unit_engine(unit_grid):
    return SpectralEngine(unit_grid)


@pytest.fixture()
def sample(unit_grid):
    def make(fn):
        return Field2.from_function(unit_grid, fn)

    return make
