import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rdpot import Distribution, GaussianSpec, discretize_gaussian, hamming_matrix, squared_error_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240831)


@pytest.fixture(scope="session")
def binary_source():
    return Distribution.from_probs([0.1, 0.9])


@pytest.fixture(scope="session")
def hamming2():
    return hamming_matrix(2, 2)


@pytest.fixture(scope="session")
def gaussian_source():
    return discretize_gaussian(GaussianSpec(mu=0.0, sigma=2.0, S=8.0, delta=0.5))


@pytest.fixture(scope="session")
def gaussian_cost(gaussian_source):
    g = gaussian_source.support
    return squared_error_matrix(g, g)
