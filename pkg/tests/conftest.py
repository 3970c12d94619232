import sys

import pytest
from hypothesis import settings

from netstpp import build_network
from netstpp.synthetic import lattice_network, random_planar_network

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def line_net():
    """Single 100 m segment along the x axis."""
    return build_network([(0.0, 0.0, 100.0, 0.0)])


@pytest.fixture
def t_net():
    """T-shaped network: two horizontal arms and one vertical stem."""
    return build_network([(-500.0, 0.0, 0.0, 0.0), (0.0, 0.0, 500.0, 0.0), (0.0, 0.0, 0.0, -500.0)])


@pytest.fixture
def grid_net():
    return lattice_network(6, 6, 100.0)


@pytest.fixture
def random_net():
    return random_planar_network(50, 1000.0, rng=11)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
