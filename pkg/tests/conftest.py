import numpy as np
import pytest

from mmdexp.distributions import DiscreteDistribution, GaussianSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo checks taking more than a few seconds")


@pytest.fixture
def coin_pair():
    """P = (0.5, 0.5) and Q = (0.9, 0.1) on the alphabet {0, 1}."""
    return DiscreteDistribution.on_alphabet([0.5, 0.5]), DiscreteDistribution.on_alphabet([0.9, 0.1])


@pytest.fixture
def shifted_pair():
    """Two 2-D unit-covariance Gaussians with means (0.25, 0.25) and (1, 1)."""
    return GaussianSpec([0.25, 0.25], np.eye(2)), GaussianSpec([1.0, 1.0], np.eye(2))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
