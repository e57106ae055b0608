import sys

import numpy as np
import pytest

from leray_alpha.dynamics import random_band_limited
from leray_alpha.spectral_core import make_grid


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 16)


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 8)


@pytest.fixture
def rand_field():
    def make(grid, band=3, seed=0, scale=1.0):
        return random_band_limited(grid, band, seed) * scale

    return make


def complex_random(grid, seed):
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
