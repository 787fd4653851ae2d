import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs over a synthetic corpus")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
