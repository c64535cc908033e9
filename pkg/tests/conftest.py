import math

import numpy as np
import pytest

from qpkc.qmath import RandomSource

R2 = 1 / math.sqrt(2)

# explicit matrices for oracles; deliberately not imported from the package
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) * R2


def sigma(phi):
    return math.cos(phi) * PAULI_Z + math.sin(phi) * PAULI_X


def kron_expectation(state, phi_b, phi_a):
    op = np.kron(sigma(phi_b), sigma(phi_a))
    return float(np.real(np.vdot(state, op @ state)))


@pytest.fixture
def rng():
    return RandomSource(20240531)
