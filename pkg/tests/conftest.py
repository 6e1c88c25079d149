import numpy as np
import pytest
from hypothesis import settings

from markovcode.chain import homogeneous_matrix, random_matrix, reference_random_matrix, validate

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

WORKED = [[0.70, 0.25, 0.05], [0.05, 0.90, 0.05], [0.10, 0.30, 0.60]]


@pytest.fixture
def worked():
    return validate(WORKED)


@pytest.fixture
def r0():
    return reference_random_matrix()


@pytest.fixture
def h4():
    return homogeneous_matrix(4, 0.5)


def random_matrices(n, count, start=0):
    return [random_matrix(n, start + i) for i in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
