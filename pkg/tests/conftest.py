import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from convexreg.config import DEFAULT

settings.register_profile(
    "convexreg",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("convexreg")


@pytest.fixture
def config():
    return DEFAULT


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)
