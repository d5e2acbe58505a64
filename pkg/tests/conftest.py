import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from axieuler.core_fields import Grid2D, ScalarField2D, make_dimension_params

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def schwartz_omega(grid, k):
    R, Z = grid.mesh()
    return ScalarField2D(grid, R * Z * (2 * k + 12 - 4 * R * R - 4 * Z * Z) * np.exp(-R * R - Z * Z))


def schwartz_velocity(R, Z, k):
    E = np.exp(-R * R - Z * Z)
    return R * (1 - 2 * Z * Z) * E, -Z * (k + 1 - 2 * R * R) * E


@pytest.fixture
def dims4():
    return make_dimension_params(4)


@pytest.fixture
def dims3():
    return make_dimension_params(3)


@pytest.fixture
def small_grid():
    return Grid2D(32, 64, 6.0, 6.0)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
