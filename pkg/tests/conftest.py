import math

import numpy as np
import pytest

from tfconc.grid import make_grid, sample


def gauss(shift=0.0, mod=0.0):
    """Unit-norm Gaussian 2^(1/4) exp(-pi (t - shift)^2) modulated by exp(2 pi i mod t)."""

    def f(t):
        return 2**0.25 * np.exp(-np.pi * (t - shift) ** 2) * np.exp(2j * np.pi * mod * t)

    return f


@pytest.fixture(scope="session")
def grid():
    return make_grid(32, 4096)


@pytest.fixture(scope="session")
def g(grid):
    return sample(grid, gauss())


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_smooth(grid, rng, n_terms=4):
    """Random unit-norm combination of shifted, dilated, modulated Gaussians."""
    t = grid.points
    v = np.zeros(grid.n_points, dtype=complex)
    for _ in range(n_terms):
        c = rng.normal() + 1j * rng.normal()
        s = rng.uniform(-3, 3)
        w = rng.uniform(0.5, 2.0)
        m = rng.uniform(-3, 3)
        v += c * np.exp(-np.pi * ((t - s) / w) ** 2) * np.exp(2j * np.pi * m * t)
    from tfconc.grid import SampledFunction

    return SampledFunction(grid, v).normalized()


GAUSS_DISPERSION = 1 / (2 * math.sqrt(math.pi))
