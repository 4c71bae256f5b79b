import numpy as np
import pytest

from mfgnet import presets
from mfgnet.fields import GridSpec


@pytest.fixture
def star():
    return presets.star_network()


@pytest.fixture
def star_grid(star):
    return GridSpec.uniform(star, 16, 1.0, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
