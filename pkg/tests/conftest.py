import numpy as np
import pytest

from degenfrac.spectral import bessel_eigen, solve_eigen


@pytest.fixture(scope="session")
def eig():
    """Session-cached eigensystems: eig(beta, K[, mesh]) -> EigenSystem.

    Eigen-decompositions at the default mesh dominate suite runtime, and
    many tests want the same (beta, K); solving each once keeps the whole
    run inside the desk-scale budget.
    """
    cache = {}

    def get(beta, K, mesh=2048):
        key = (float(beta), int(K), int(mesh))
        if key not in cache:
            cache[key] = solve_eigen(beta, K, mesh)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def beig():
    """Session-cached closed-form (Bessel-substitution) eigensystems."""
    cache = {}

    def get(beta, K):
        key = (float(beta), int(K))
        if key not in cache:
            cache[key] = bessel_eigen(beta, K)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)
