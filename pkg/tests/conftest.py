import math

import pytest
from hypothesis import settings

from brwre.env import EnvironmentSpec, MuDistribution

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

SQRT2_M1 = math.sqrt(2.0) - 1.0


@pytest.fixture
def bernoulli_spec():
    """kappa = 1, c = 1, killing 0 or 1 with equal odds, source 0.4."""
    return EnvironmentSpec(0.4, 1.0, 1.0, MuDistribution.bernoulli(0.5))


@pytest.fixture
def mixed_spec():
    """Atoms plus a uniform continuous part; supercritical for most draws."""
    return EnvironmentSpec(1.0, 1.0, 1.0, MuDistribution(0.3, 0.3, 0.4))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
