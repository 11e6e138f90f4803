import numpy as np
import pytest

from hazetools import DehazeConfig, Initializer, make_test_scene, synthesize_haze
from hazetools.image import AirLight

AIRLIGHT_TRUE = AirLight((0.9, 0.95, 1.0))


@pytest.fixture(scope="session")
def small_scene():
    """One 48x48 hazy scene shared by tests that just need a plausible input."""
    spec = make_test_scene("steps", 48, beta=0.8)
    hazy, t_true = synthesize_haze(spec)
    return spec, hazy, t_true


@pytest.fixture()
def small_config():
    return DehazeConfig(initializer=Initializer("dilation", 4), eps_t=0.0,
                        airlight=AIRLIGHT_TRUE)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)
