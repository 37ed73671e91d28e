import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cgauss(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
