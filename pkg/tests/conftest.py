import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_state(rng, L):
    psi = rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L)
    return psi / np.linalg.norm(psi)
