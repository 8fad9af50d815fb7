import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("modeqfi", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("modeqfi")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
