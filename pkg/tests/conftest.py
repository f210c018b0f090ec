import numpy as np
import pytest

from langevin_mimo.constellation import make_qam


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def qpsk():
    return make_qam(4)


@pytest.fixture(scope="session")
def qam16():
    return make_qam(16)


def random_channel(rng, n_rx, n_users):
    return (rng.standard_normal((n_rx, n_users)) + 1j * rng.standard_normal((n_rx, n_users))) / np.sqrt(2 * n_rx)
