import numpy as np
import pytest

from hyptile import tiling as tl
from hyptile.ops.partition import PartitionOfUnity

#: filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def octagon():
    return tl.build_template(8)


@pytest.fixture(scope="session")
def atlas3(octagon):
    return tl.enumerate_tiling(octagon, 3)


@pytest.fixture(scope="session")
def atlas4(octagon):
    return tl.enumerate_tiling(octagon, 4)


@pytest.fixture(scope="session")
def pou4(atlas4):
    return PartitionOfUnity(atlas4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_points(rng, n, radius=3.0):
    """Points of H^2 within ``radius`` of the origin, uniform in direction and distance."""
    r = rng.uniform(0.0, radius, n)
    a = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.stack([np.sinh(r) * np.cos(a), np.sinh(r) * np.sin(a), np.cosh(r)], axis=1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
