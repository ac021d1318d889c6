import numpy as np
import pytest

from openended.sim import TableGeometry


@pytest.fixture
def geometry():
    return TableGeometry()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
