import math

import numpy as np
import pytest

from dispersive_lab.angular import builtin_potential, spectrum_for
from dispersive_lab.hankel import RadialGrid


@pytest.fixture(scope="session")
def free3():
    return spectrum_for(builtin_potential("free", 3), lmax=320)


@pytest.fixture(scope="session")
def invsq():
    """a = -3/16 on R^3: nu_0 = 1/4, alpha = -1/4, p(alpha) = 12."""
    return spectrum_for(builtin_potential("constant_a:-0.1875", 3), lmax=320)


@pytest.fixture(scope="session")
def grid3():
    return RadialGrid(3, 1e-3, 40.0, 0.5)


@pytest.fixture(scope="session")
def rho3():
    return RadialGrid(3, 1e-3, 16.0, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def free_heat(t, d):
    return (4 * math.pi * t) ** -1.5 * np.exp(-d ** 2 / (4 * t))
