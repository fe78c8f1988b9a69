import numpy as np
import pytest

from spblas.conformance import random_csr


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_random(rng):
    return random_csr(rng, 16, 12, 0.2)


def identity_csr(n, dtype=np.float64):
    from spblas.views import CsrView

    return CsrView(n, n, np.arange(n + 1), np.arange(n), np.ones(n, dtype=dtype))
