"""
Fixtures compartilhadas: desenhos fatoriais exatos e amostras simuladas
"""
import itertools

import numpy as np
import pytest

from mr2.dataset import Dataset
from mr2.dependencies import EstimationServiceFactory


@pytest.fixture
def factorial_g():
    """Todas as 2^K células de G binário, repetidas `tiles` vezes"""
    def _make(k_total: int, tiles: int = 1) -> np.ndarray:
        cells = np.array(list(itertools.product([0.0, 1.0], repeat=k_total)))
        return np.tile(cells, (tiles, 1))
    return _make


@pytest.fixture
def simulate():
    """
    Amostra do desenho de identidade com todas as interações:
    A = C (prod(1 + G) - 1) + e2, Y = beta_a A + beta'G + e1.
    """
    def _make(
        n: int,
        k_total: int = 3,
        beta_direct=None,
        C: float = 0.6,
        p: float = 0.8,
        beta_a: float = 1.0,
        seed: int = 11,
        noise: float = 1.0,
    ) -> Dataset:
        rng = np.random.default_rng(seed)
        beta = np.zeros(k_total) if beta_direct is None else np.asarray(beta_direct, dtype=float)
        g = rng.binomial(1, p, size=(n, k_total)).astype(float)
        cov = noise * np.array([[1.0, 0.25], [0.25, 1.0]])
        errors = rng.multivariate_normal(np.zeros(2), cov, size=n)
        a = C * (np.prod(1.0 + g, axis=1) - 1.0) + errors[:, 1]
        y = beta_a * a + g @ beta + errors[:, 0]
        return Dataset(y=y, a=a, g=g, binary_instruments=True)
    return _make


@pytest.fixture(autouse=True)
def reset_factory():
    yield
    EstimationServiceFactory.reset()
