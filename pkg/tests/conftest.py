from functools import lru_cache

import numpy as np
import pytest

from neumann_dual import DomainKind, make_exponents, make_grid, minimize
from neumann_dual.minimizer import MinimizeOptions


@lru_cache(maxsize=None)
def solved(tag: str, N: int, delta: float, p: float, q: float, nodes: int, seed: int = 0):
    """Cached minimizer runs shared by several test modules."""
    kind = DomainKind(tag, N, delta)
    grid = make_grid(kind, nodes)
    return minimize(grid, make_exponents(p, q, kind.N), MinimizeOptions(seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def interval_sublinear():
    return solved("interval", 1, -1.0, 0.5, 0.5, 2048)


@pytest.fixture(scope="session")
def ball3_superlinear():
    return solved("ball", 3, 0.0, 3.0, 3.0, 2048)


@pytest.fixture(scope="session")
def ball2_superlinear():
    return solved("ball", 2, 0.0, 3.0, 3.0, 1024)


@pytest.fixture(scope="session")
def annulus_superlinear():
    return solved("annulus", 2, 0.3, 2.0, 5.0, 1024)
