import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def e(d, k):
    v = np.zeros(d, dtype=complex)
    v[k] = 1
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
