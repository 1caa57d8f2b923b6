import numpy as np
import pytest

from lindforge.lindblad import JumpOperator, Lindbladian
from lindforge.states import SchmidtState

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


def amplitude_damping(kappa=1.0):
    """Single qubit decaying |1> -> |0>, written as a 2 x 1 bipartite system."""
    return Lindbladian(2, 1, None, (JumpOperator(SIGMA_MINUS, np.zeros((1, 1)), kappa),))


def random_density(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_full_rank_state(n, rng, floor=0.02):
    p = rng.uniform(floor, 1.0, n)
    return SchmidtState.from_weights(p / p.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def damping():
    return amplitude_damping()
