import numpy as np
import pytest

from smallscat.geometry import Obstacle, Scene, icosphere


def sphere_obstacle(center=(0.0, 0.0, 0.0), radius=1.0, level=2, bound=None):
    c = np.asarray(center, dtype=float)
    return Obstacle(icosphere(level, radius, c), c, bound or radius)


@pytest.fixture(scope="session")
def two_spheres():
    """Two unit icosphere-2 obstacles with centers 3 apart."""
    return Scene((sphere_obstacle((0, 0, 0)), sphere_obstacle((3, 0, 0))))


@pytest.fixture(scope="session")
def coarse_pair():
    """Two icosphere-1 obstacles, cheap enough for time-domain runs."""
    return Scene((sphere_obstacle((0, 0, 0), 0.8, 1, 0.85), sphere_obstacle((-1, -1, 1), 0.8, 1, 0.85)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
