import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from udwq.weyl import BilinearTable

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_table(rng, scale=1.0, rank=None):
    """Table from the Gram matrix of random complex one-particle vectors."""
    rank = rank or int(rng.integers(1, 5))
    V = (rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))) * scale / np.sqrt(2 * rank)
    return BilinearTable.from_wightman(V.conj() @ V.T)


def spacelike_table(rng, scale=1.0, dim=4):
    """Random table with every ``E(f_i, g_j) = 0``."""
    f = (rng.normal(size=(2, dim)) + 1j * rng.normal(size=(2, dim))) * scale / np.sqrt(2 * dim)
    # Im <f_i, g> = Im(conj(f_i) . g) is real-linear in (Re g, Im g)
    A = np.concatenate([-f.imag, f.real], axis=1)
    _, _, vt = np.linalg.svd(A)
    null = vt[2:]
    g = []
    for _ in range(2):
        x = null.T @ rng.normal(size=null.shape[0]) * scale / np.sqrt(2 * dim)
        g.append(x[:dim] + 1j * x[dim:])
    V = np.vstack([f, np.array(g)])
    W = V.conj() @ V.T
    iu = np.ix_([0, 1], [2, 3])
    W[iu] = W[iu].real
    W[2:, :2] = W[:2, 2:].T
    return BilinearTable.from_wightman(W)


def ideal_table(rng, strong=False):
    W11, W22 = rng.uniform(0.05, 1.0, 2)
    H12 = rng.uniform(-1, 1) * np.sqrt(W11 * W22)
    bound = np.sqrt(4 * W11 * W22 - H12**2)
    E12 = rng.uniform(-1, 1) * bound
    return BilinearTable.ideal(W11, W22, E12, H12)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
