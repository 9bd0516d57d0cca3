import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ellreg.grid import GridSpec

settings.register_profile(
    "ci", max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")


@pytest.fixture
def grid1d():
    return GridSpec(1, 64, math.pi)


@pytest.fixture
def grid2d():
    return GridSpec(2, 32, math.pi)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
