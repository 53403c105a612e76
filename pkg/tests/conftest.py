import pytest

from stratexp.datasets import synthetic_population
from stratexp.moments import v_table
from helpers import make_population


@pytest.fixture(scope="session")
def synthetic():
    """The committed two-stratum reference population, N=(6,7), n=(3,3)."""
    return synthetic_population()


@pytest.fixture(scope="session")
def synthetic_v(synthetic):
    return v_table(synthetic)


@pytest.fixture(scope="session")
def desk():
    """Single-stratum desk population: N=6, n=3, 20 possible samples."""
    return make_population(("S", [1, 2, 3, 4, 5, 6], [2, 3, 5, 4, 6, 8], 3))


@pytest.fixture(scope="session")
def desk_v(desk):
    return v_table(desk)
