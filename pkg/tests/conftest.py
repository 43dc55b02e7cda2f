import math

import numpy as np
import pytest

from qusynth.config import defaults


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def config(tmp_path):
    config = defaults()
    config.output.dir = str(tmp_path/'results')
    config.output.svg = False
    return config


@pytest.fixture
def rabi():
    return 2*math.pi*2000.0
