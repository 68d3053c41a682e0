import numpy as np
import pytest

from gassense.casimir import FiberGeometry, MatsubaraGrid, QuadratureSpec, SphereSpec
from gassense.config import load_config
from gassense.gas import load_species_db
from gassense.materials import load_material_db


@pytest.fixture(scope="session")
def mats():
    return {m.name: m for m in load_material_db()}


@pytest.fixture(scope="session")
def species():
    return load_species_db()


@pytest.fixture(scope="session")
def geom(mats):
    return FiberGeometry(5e-7, 1e-6, mats["fiber_sio2"])


@pytest.fixture(scope="session")
def silica(mats):
    return SphereSpec(1e-8, mats["silica"])


@pytest.fixture(scope="session")
def grid():
    return MatsubaraGrid(300.0)


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec()


@pytest.fixture(scope="session")
def run_config():
    return load_config()


@pytest.fixture(scope="session")
def model(run_config):
    return run_config.sensor_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
