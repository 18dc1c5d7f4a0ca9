import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bgkmix import grid as vgrid
from bgkmix import params as mp

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def hamel():
    return mp.preset("hamel", 2.0, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    return vgrid.VelocityGrid.box(0.0, 7.0, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
