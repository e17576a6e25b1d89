import numpy as np
import pytest

from src.solitonlab.fields.grid import SpatialGrid
from src.solitonlab.model.nonlinearity import PowerNonlinearity
from src.solitonlab.profile.cache import ProfileCache
from src.solitonlab.profile.solver import solve_profile
from src.solitonlab.profile.types import ParameterDomain


@pytest.fixture(scope="session")
def cubic():
    return PowerNonlinearity(exponent=1.0, coupling=1.0)


@pytest.fixture(scope="session")
def cubic_profile(cubic):
    return solve_profile(cubic, 1.0, 1)


@pytest.fixture(scope="session")
def cubic_cache(cubic):
    return ProfileCache(cubic, 1, ParameterDomain(0.5, 2.0))


@pytest.fixture(scope="session")
def line_grid():
    return SpatialGrid(1, 40.0, 2048)


@pytest.fixture
def sech():
    def exact(x, mu=1.0):
        return np.sqrt(2.0 * mu) / np.cosh(np.sqrt(mu) * x)

    return exact


@pytest.fixture(scope="session")
def townes_profile(cubic):
    return solve_profile(cubic, 1.0, 2)
