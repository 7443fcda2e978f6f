import numpy as np
import pytest

from minimax_adaptive.riccati import GameSpec, solve_riccati
from minimax_adaptive.value import ClosedFormValue

GAMMA_STAR = 2.5232


def scalar_spec(gamma=GAMMA_STAR, a=1.0, b=1.0, q=1.0, r=1.0):
    return GameSpec(a, b, q, r, gamma)


@pytest.fixture(scope="session")
def ex1():
    """Example-1 system at the critical gamma."""
    return ClosedFormValue.from_spec(scalar_spec())


@pytest.fixture(scope="session")
def ex1_26():
    return ClosedFormValue.from_spec(scalar_spec(2.6))


@pytest.fixture(scope="session")
def ex1_22():
    return ClosedFormValue.from_spec(scalar_spec(2.2))


def random_psd_info(rng, n, rank=None):
    """Random PSD information matrix of size 2n built from outer products."""
    rank = rank or 2 * n
    Zeta = rng.standard_normal((2 * n, rank))
    return Zeta @ Zeta.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
