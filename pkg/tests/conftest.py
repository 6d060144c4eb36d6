import numpy as np
import pytest

from qspectral.io import builtin_state

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bell():
    return builtin_state("bell")
