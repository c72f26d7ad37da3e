import pytest

from conic_ke.geometry import ConeConfiguration, Grid, fubini_study_potential
from conic_ke.ma_solver import continuity_path, smoothing_family


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def wide_grid():
    """Half width 40: truncation below 1e-8 even at beta = 0.5."""
    return Grid(-40.0, 40.0, 4097)


@pytest.fixture(scope="session")
def fine_grid():
    return Grid(-16.0, 16.0, 8193)


@pytest.fixture(scope="session")
def fs(grid):
    return fubini_study_potential(grid)


@pytest.fixture(scope="session")
def trace_08(grid):
    """Uniform 100-step continuation at beta = 0.8, delta = 1e-3."""
    return continuity_path(ConeConfiguration(0.8), 1e-3, schedule=100, grid=grid)


@pytest.fixture(scope="session")
def trace_08_halved(grid):
    return continuity_path(ConeConfiguration(0.8), 1e-3, schedule=200, grid=grid)


@pytest.fixture(scope="session")
def smoothing_075(grid):
    """delta sweep 1e-1 .. 1e-5 at beta = 0.75."""
    return smoothing_family(ConeConfiguration(0.75),
                            [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], grid)
