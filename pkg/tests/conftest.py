import numpy as np
import pytest

from hydroelastic.elasticity import PhysicalParams, make_canonical_energy
from hydroelastic.linear import double_points
from hydroelastic.spectral import Discretization

G, G_RHO = 9.81, 1.0


@pytest.fixture(scope="session")
def model():
    return make_canonical_energy(4.0, 1.0)


@pytest.fixture(scope="session")
def params():
    """Reference constants at lambda = (5, 6.81)."""
    return PhysicalParams.from_g_rho(G, G_RHO, 5.0, 6.81)


@pytest.fixture(scope="session")
def disc():
    return Discretization()


@pytest.fixture(scope="session")
def dp23(params, model):
    return double_points(2, 3, params.g, params.rho, model.E11, model.E22)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
