import numpy as np
import pytest

from irsopt.acceptance import random_instance
from irsopt.model import ChannelRealization


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def scalar_real(h=1.0):
    """M = K = 1 realization with direct channel ``h`` and a dummy IRS element switched off."""
    return ChannelRealization(G=np.zeros((1, 1)), h_d=np.array([[h]]), h_r=np.zeros((1, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def instance(rng):
    return random_instance(rng)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
