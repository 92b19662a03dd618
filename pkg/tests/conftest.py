import os

import numpy as np
import pytest

_CONFIG_KEYS = (
    "INPUT", "PRESET", "DEGREE", "DEGREES", "SOLVER", "EXACTNESS_FACTOR", "SKIP", "HALTON_COUNT", "DIM", "OUT",
    "RTOL", "KTOL", "FORMAT", "MESH_CONSTANT", "WORKERS", "LOG_LEVEL", "USE_CLOUD_LOGGING",
)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20231017)


@pytest.fixture
def clean_env():
    """Drops every configuration key from the environment and restores it afterwards."""
    saved = dict(os.environ)
    for key in _CONFIG_KEYS:
        os.environ.pop(key, None)
    yield
    os.environ.clear()
    os.environ.update(saved)
