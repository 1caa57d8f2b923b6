"""Two spin chains with boundary two-mode-squeezing dissipation.

Qubit order is A sites 1..n then B sites 1..n, each qubit with basis
``|0>, |1>`` and ``sigma^- = |0><1|``. The A|B cut is the first/second half
of the qubits, so a chain Lindbladian has ``n_a = n_b = 2**n``.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import brentq

from .lindblad import JumpOperator, Lindbladian

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
MAX_QUBITS = 8
DEFAULT_BULK_FRACTION = 0.1


@dataclass(frozen=True)
class ChainSpec:
    """Chain length, couplings and squeezing amplitudes (``u^2 + v^2 = 1``)."""

    n: int
    j: float = 1.0
    j_z: float = 0.0
    v: float = 0.1
    u: float = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit per chain")
        if 2 * self.n > MAX_QUBITS:
            raise ValueError(f"{2 * self.n} qubits exceeds the dense limit of {MAX_QUBITS}")
        if not 0 <= self.v <= 1:
            raise ValueError(f"v must lie in [0, 1], got {self.v!r}")
        u = np.sqrt(1.0 - self.v**2) if self.u is None else float(self.u)
        if abs(u**2 + self.v**2 - 1.0) > 1e-12:
            raise ValueError(f"u^2 + v^2 = {u**2 + self.v**2!r}, expected 1")
        object.__setattr__(self, "u", u)


def site_operator(op, site, n_sites):
    """``op`` on qubit ``site`` (0-based) of ``n_sites`` qubits."""
    mats = [np.eye(2, dtype=complex)] * n_sites
    mats[site] = op
    return reduce(np.kron, mats)


def _bond(op1, op2, i, k, n_sites):
    return site_operator(op1, i, n_sites) @ site_operator(op2, k, n_sites)


def _hopping(n, j):
    # J (s+_i s-_{i+1} + h.c.) along one chain of n qubits
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n - 1):
        t = _bond(SIGMA_PLUS, SIGMA_MINUS, i, i + 1, n)
        h += j * (t + t.conj().T)
    return h


def _zz(n, j_z):
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n - 1):
        h += j_z * _bond(SIGMA_Z, SIGMA_Z, i, i + 1, n)
    return h


def boundary_jumps(spec):
    """``u s-_A1 + v s+_B1`` and ``u s-_B1 + v s+_A1`` as local A/B pairs."""
    n = spec.n
    lo_a = site_operator(SIGMA_MINUS, 0, n)
    hi_a = site_operator(SIGMA_PLUS, 0, n)
    return (
        JumpOperator(spec.u * lo_a, spec.v * hi_a, 1.0),
        JumpOperator(spec.v * hi_a, spec.u * lo_a, 1.0),
    )


def _chain_sum(h_a, h_b):
    d = h_a.shape[0]
    return np.kron(h_a, np.eye(d)) + np.kron(np.eye(d), h_b)


def xxz_lindbladian(spec):
    """XXZ chains whose ZZ couplings have opposite signs on A and B."""
    n = spec.n
    hop = _hopping(n, spec.j)
    zz = _zz(n, spec.j_z)
    h = _chain_sum(hop + zz, hop - zz)
    d = 2**n
    return Lindbladian(d, d, h, boundary_jumps(spec))


def rung_hamiltonian(spec):
    """``sum_i J (xx + yy) + J_z zz`` across each A_i--B_i rung."""
    n = spec.n
    total = 2 * n
    h = np.zeros((4**n, 4**n), dtype=complex)
    for i in range(n):
        a, b = i, n + i
        h += spec.j * (_bond(SIGMA_X, SIGMA_X, a, b, total) + _bond(SIGMA_Y, SIGMA_Y, a, b, total))
        h += spec.j_z * _bond(SIGMA_Z, SIGMA_Z, a, b, total)
    return h


def ladder_lindbladian(spec):
    """XX legs plus XXZ rungs, same boundary dissipation as the chains."""
    n = spec.n
    hop = _hopping(n, spec.j)
    h = _chain_sum(hop, hop) + rung_hamiltonian(spec)
    d = 2**n
    return Lindbladian(d, d, h, boundary_jumps(spec))


def rainbow_state(n, v):
    """Product over rungs of ``sqrt(1-v^2)|00> + (-1)^i v|11>``, in A-then-B qubit order."""
    if not 0 <= v <= 1:
        raise ValueError(f"v must lie in [0, 1], got {v!r}")
    c = np.sqrt(1.0 - v**2)
    # rung i is diagonal in the A_i, B_i pair: coefficient matrix diag(c, +-v)
    coeff = reduce(np.kron, [np.diag([c, (-1) ** i * v]) for i in range(1, n + 1)])
    # coeff[a, b] with a, b the A- and B-chain bit strings
    return coeff.astype(complex).reshape(-1)


def rainbow_delta_e2(n, v):
    """Entanglement deficit of the rainbow state across the chain cut."""
    w = (1.0 - v**2) ** 2 + v**4
    return float(w**n - 0.5**n)


def rainbow_v_for_delta_e2(n, target):
    """``v`` in ``[0, 1/sqrt(2)]`` giving the requested deficit."""
    hi = rainbow_delta_e2(n, 0.0)
    if not 0 <= target <= hi:
        raise ValueError(f"target delta_e2={target!r} outside [0, {hi!r}]")
    if target == 0:
        return float(np.sqrt(0.5))
    if target == hi:
        return 0.0
    return float(brentq(lambda v: rainbow_delta_e2(n, v) - target, 0.0, np.sqrt(0.5), xtol=1e-15))


def count_midgap(spec_result, bulk_threshold_fraction=DEFAULT_BULK_FRACTION):
    """Non-steady eigenvalues decaying slower than a fraction of the median decay rate."""
    rates = -spec_result.nonsteady.real
    if rates.size == 0:
        return 0
    return int(np.sum(rates < bulk_threshold_fraction * np.median(rates)))


def midgap_mask(spec_result, bulk_threshold_fraction=DEFAULT_BULK_FRACTION):
    """Boolean mask over ``spec_result.eigenvalues`` marking midgap modes."""
    mask = np.zeros(spec_result.eigenvalues.size, dtype=bool)
    rates = -spec_result.nonsteady.real
    if rates.size:
        mask[spec_result.steady_count :] = rates < bulk_threshold_fraction * np.median(rates)
    return mask
