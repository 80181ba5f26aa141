import cmath

import numpy as np
import pytest

from lamelab import make_context

RHO = cmath.exp(1j * cmath.pi / 3)


@pytest.fixture(scope="session")
def ctx():
    """Generic non-symmetric torus used throughout."""
    return make_context(0.22 + 1.31j)


@pytest.fixture(scope="session")
def ctx_rho():
    """Hexagonal torus tau = e^{i pi/3}."""
    return make_context(RHO)


@pytest.fixture(scope="session")
def ctx_rect():
    return make_context(1.2j)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_tau(rng, re=(-0.45, 0.95), im=(0.6, 2.1)):
    return complex(rng.uniform(*re), rng.uniform(*im))


def random_clear_rs(rng, margin=0.05):
    return rng.uniform(margin, 1.0 - margin), rng.uniform(margin, 1.0 - margin)
