"""Local dissipators engineered to leave a chosen entangled pure state dark.

All matrices are in the Schmidt basis of the target state.
"""

import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import linalg
from .lindblad import JumpOperator, Lindbladian
from .linalg import dagger
from .states import SchmidtState, psi_operator

ENSEMBLES = ("ginibre", "hermitian", "symmetric", "detailed_balance")
# refuse to invert Psi below this weight; warn below the second
P_MIN_REFUSE = 1e-12
P_MIN_WARN = 1e-6


class ConditioningWarning(UserWarning):
    """The partner map amplifies entries by sqrt(p_max / p_min)."""


@dataclass(frozen=True)
class EnsembleKind:
    tag: str = "ginibre"
    sigma: float = 1.0

    def __post_init__(self):
        if self.tag not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.tag!r}; choose from {ENSEMBLES}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be finite and positive, got {self.sigma!r}")


@dataclass(frozen=True)
class UnevenSpec:
    n_a: int
    n_b: int
    sigma_b: float = 0.0

    def __post_init__(self):
        if self.n_b <= self.n_a:
            raise ValueError(f"need n_b > n_a, got n_a={self.n_a}, n_b={self.n_b}")
        if self.sigma_b < 0:
            raise ValueError("sigma_b must be non-negative")


def _sqrt_weights(state):
    if state.p_min <= P_MIN_REFUSE:
        raise ValueError(
            f"state is rank deficient (p_min={state.p_min:.3e}); use uneven_partner "
            "or gamma_max_prime for states without full Schmidt rank"
        )
    if state.p_min < P_MIN_WARN:
        warnings.warn(
            f"p_min={state.p_min:.3e}: partner entries amplified by up to "
            f"{np.sqrt(state.p[0] / state.p_min):.1e}",
            ConditioningWarning,
            stacklevel=3,
        )
    return np.sqrt(state.p)


def partner_operator(a, state):
    """The B block ``-Psi a^T Psi^-1`` that makes ``a (x) 1 + 1 (x) b`` annihilate the state."""
    a = linalg.as_matrix(a, "a")
    n = state.n
    if a.shape != (n, n):
        raise ValueError(f"a has shape {a.shape}, expected {(n, n)}")
    s = _sqrt_weights(state)
    return -(s[:, None] * a.T) / s[None, :]


def ginibre(n, sigma, rng):
    """Complex Ginibre matrix with ``E|A_ij|^2 = sigma^2``."""
    return sigma * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def sample_a(kind, state, rng):
    """Draw the A block of one jump from the requested ensemble."""
    n = state.n
    a = ginibre(n, kind.sigma, rng)
    if kind.tag == "ginibre":
        return a
    if kind.tag == "hermitian":
        return (a + dagger(a)) / np.sqrt(2)
    a_s = (a + a.T) / np.sqrt(2)
    if kind.tag == "symmetric":
        return a_s
    s = _sqrt_weights(state)
    return (a_s + (s[:, None] * a_s.T) / s[None, :]) / np.sqrt(2)


def random_jump(kind, state, rng):
    a = sample_a(kind, state, rng)
    return JumpOperator(a, partner_operator(a, state), 1.0)


def engineered_lindbladian(state, m, kind, rng, hamiltonian=None):
    """``m`` independent random engineered jumps, no Hamiltonian by default."""
    jumps = tuple(random_jump(kind, state, rng) for _ in range(m))
    return Lindbladian(state.n_a, state.n_b, hamiltonian, jumps)


def kernel_dimension(j, tol=linalg.DEFAULT_KERNEL_TOL):
    return int(linalg.null_space(j.operator(), tol).shape[1])


def joint_kernel_dimension(jumps, tol=linalg.DEFAULT_KERNEL_TOL):
    """Dimension of the common kernel of several jumps."""
    stacked = np.vstack([j.operator() for j in jumps])
    return int(linalg.null_space(stacked, tol).shape[1])


def uneven_partner(a, spec, state, rng):
    """B block on the larger subsystem for a jump that leaves the state dark.

    Rows and columns ``< n_a`` hold the equal-dimension partner. The block
    feeding the extra levels into the Schmidt levels (rows ``< n_a``,
    columns ``>= n_a``) is real Gaussian with standard deviation
    ``sigma_b``. The block mapping Schmidt levels out to extra levels must
    vanish for the state to stay dark, and the extra-extra block is set to 0.
    """
    if spec.n_b <= spec.n_a:
        raise ValueError("uneven construction needs n_b > n_a")
    if state.n != spec.n_a:
        raise ValueError(f"state has {state.n} Schmidt weights, expected {spec.n_a}")
    b = np.zeros((spec.n_b, spec.n_b), dtype=complex)
    b[: spec.n_a, : spec.n_a] = partner_operator(a, state)
    if spec.sigma_b > 0:
        shape = (spec.n_a, spec.n_b - spec.n_a)
        b[: spec.n_a, spec.n_a :] = spec.sigma_b * rng.standard_normal(shape)
    return b


def uneven_lindbladian(state, spec, m, kind, rng):
    jumps = []
    for _ in range(m):
        a = sample_a(kind, state, rng)
        jumps.append(JumpOperator(a, uneven_partner(a, spec, state, rng), 1.0))
    return Lindbladian(spec.n_a, spec.n_b, None, tuple(jumps))


def uneven_state_vector(state, n_b):
    psi = np.zeros((state.n, n_b), dtype=complex)
    idx = np.arange(state.n)
    psi[idx, idx] = np.sqrt(state.p)
    return psi.reshape(-1)


def compatible_projector(n_a, n_b):
    """Diagonal of the superoperator projector onto operators living on the first ``n_a`` B levels."""
    q = np.kron(np.ones(n_a), (np.arange(n_b) < n_a).astype(float))
    return np.kron(q, q)


def reduced_superoperator(l, n_a=None, superop=None, compress=False):
    """``P L P`` with ``P`` the projector onto the ``n_a^4``-dimensional block.

    With ``compress=True`` only that block is returned, as an
    ``n_a^4 x n_a^4`` matrix.
    """
    from .lindblad import build_superoperator

    n_a = l.n_a if n_a is None else n_a
    s = build_superoperator(l) if superop is None else superop
    mask = compatible_projector(n_a, l.n_b).astype(bool)
    if compress:
        return s[np.ix_(mask, mask)]
    out = np.zeros_like(s)
    out[np.ix_(mask, mask)] = s[np.ix_(mask, mask)]
    return out


@dataclass(frozen=True)
class CQAResult:
    h_a: np.ndarray
    h_b: np.ndarray
    h_ab: np.ndarray
    lindbladian: Lindbladian

    def local_lindbladian(self, jumps_a):
        """Generator of subsystem A alone, ``-i[H_A, .] + sum D[A_mu]``."""
        n = self.h_a.shape[0]
        return Lindbladian(n, 1, self.h_a, tuple(JumpOperator(a, np.zeros((1, 1)), 1.0) for a in jumps_a))


def _dissipator(a, rho):
    ad = dagger(a)
    ada = ad @ a
    return a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada)


def cqa_construct(a, state, db_tol=1e-9, gap_tol=1e-9):
    """Cascaded (A drives B) generator with the target state as its steady state.

    ``a`` is one A block or a sequence of them; each must satisfy
    ``a = Psi a^T Psi^-1`` so that its partner is ``-a``. Returns
    ``CQAResult(h_a, h_b, h_ab, lindbladian)``.
    """
    blocks = [linalg.as_matrix(a)] if np.ndim(a) == 2 else [linalg.as_matrix(x) for x in a]
    n = state.n
    if state.n_a != state.n_b:
        raise ValueError("cascaded construction needs equal subsystem dimensions")
    s = _sqrt_weights(state)
    p = state.p
    if n > 1 and np.min(np.abs(np.diff(p))) <= gap_tol:
        raise ValueError("cascaded construction needs pairwise distinct Schmidt weights")
    psi = psi_operator(state)
    psi_inv = np.diag(1.0 / s).astype(complex)
    for x in blocks:
        if x.shape != (n, n):
            raise ValueError(f"block of shape {x.shape}, expected {(n, n)}")
        if np.abs(x - psi @ x.T @ psi_inv).max() > db_tol * max(1.0, np.abs(x).max()):
            raise ValueError("A block violates the detailed-balance condition a = Psi a^T Psi^-1")

    rho_a = np.diag(p).astype(complex)
    drho = sum(_dissipator(x, rho_a) for x in blocks)
    # off-diagonal H_A cancels D[A] rho_A; diagonal is a free gauge, set to 0
    denom = p[:, None] - p[None, :]
    np.fill_diagonal(denom, 1.0)
    h_a = 1j * drho / denom
    np.fill_diagonal(h_a, 0.0)
    h_a = 0.5 * (h_a + dagger(h_a))

    ada = sum(dagger(x) @ x for x in blocks)
    h_b = -0.5 * psi @ (h_a - 0.5j * ada).T @ psi_inv
    h_b = h_b + dagger(h_b)

    eye = np.eye(n)
    h_ab = np.zeros((n * n, n * n), dtype=complex)
    jumps = []
    for x in blocks:
        b = -x
        h_ab += 0.5j * (np.kron(dagger(x), b) - np.kron(x, dagger(b)))
        jumps.append(JumpOperator(x, b, 1.0))
    h = np.kron(h_a, eye) + np.kron(eye, h_b) + h_ab
    h = 0.5 * (h + dagger(h))
    lind = Lindbladian(n, n, h, tuple(jumps))
    return CQAResult(h_a, h_b, h_ab, lind)


def structured_copies(l, state, n_copies):
    """``n_copies`` independent copies of ``l`` regrouped as (A_1..A_n)|(B_1..B_n).

    Each jump of copy ``k`` acts on the ``k``-th A and B factors only, so the
    result stays local across the enlarged cut. Returns the generator and the
    product Schmidt state.
    """
    if n_copies < 1:
        raise ValueError("need at least one copy")
    if l.n_a != l.n_b:
        raise ValueError("structured copies need equal local dimensions")
    n_a, n_b = l.n_a, l.n_b
    da, db = n_a**n_copies, n_b**n_copies

    def embed(op, k, d):
        mats = [np.eye(d, dtype=complex)] * n_copies
        mats[k] = op
        return reduce(np.kron, mats)

    p = reduce(np.kron, [state.p] * n_copies)
    # Schmidt weights are kept in descending order, so relabel the product basis
    order = np.argsort(-p, kind="stable")

    def relabel(x, o):
        return x[np.ix_(o, o)]

    jumps = tuple(
        JumpOperator(relabel(embed(j.a, k, n_a), order), relabel(embed(j.b, k, n_b), order), j.kappa)
        for k in range(n_copies)
        for j in l.jumps
    )
    # copy-ordered (A1 B1 A2 B2 ...) to cut-ordered (A1 A2 ... B1 B2 ...)
    shape = [n_a, n_b] * n_copies
    perm = list(range(0, 2 * n_copies, 2)) + list(range(1, 2 * n_copies, 2))
    d = da * db
    h = np.zeros((d, d), dtype=complex)
    for k in range(n_copies):
        hk = embed(l.hamiltonian, k, l.dim).reshape(shape * 2)
        hk = hk.transpose(perm + [2 * n_copies + x for x in perm])
        h += hk.reshape(d, d)
    full = np.kron(np.eye(da)[order], np.eye(db)[order])
    h = full @ h @ full.T
    return Lindbladian(da, db, h, jumps), SchmidtState(da, db, p)
