"""Shared fixtures for the laboratory test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.functional import Params
from core.grid import build_grid, random_bumps


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow studies")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute refinement and sweep studies")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)



@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def disk17():
    return build_grid("disk", 1.0, 17)


@pytest.fixture(scope="session")
def disk33():
    return build_grid("disk", 1.0, 33)


@pytest.fixture(scope="session")
def square33():
    return build_grid("square", 1.0, 33)


@pytest.fixture
def params():
    return Params(p=6.0, alpha=-0.01, rho=1.0)


@pytest.fixture
def bump_field(disk33, rng):
    return random_bumps(disk33, rng, rho=1.0)
