"""Bipartite pure states in Schmidt form and their entanglement measures."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# weights below this are treated as exact zeros
ZERO_WEIGHT = 1e-14


@dataclass(frozen=True)
class SchmidtState:
    """Schmidt weights ``p`` of a pure state on ``C^n_a (x) C^n_b``.

    The state is ``sum_i sqrt(p_i) |i>_A |i>_B`` in its Schmidt basis, with
    ``p`` sorted in descending order and ``len(p) == min(n_a, n_b)``.
    """

    n_a: int
    n_b: int
    p: np.ndarray
    rank_deficient: bool = field(default=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        n = min(self.n_a, self.n_b)
        if p.size != n:
            raise ValueError(f"expected {n} Schmidt weights, got {p.size}")
        if np.any(p < -ZERO_WEIGHT):
            raise ValueError("Schmidt weights must be non-negative")
        p = np.where(p < ZERO_WEIGHT, 0.0, p)
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"Schmidt weights sum to {p.sum()!r}, not 1")
        # stable sort keeps index order among ties
        p = p[np.argsort(-p, kind="stable")]
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "rank_deficient", bool(p[-1] == 0.0))

    @classmethod
    def from_weights(cls, p, n_a=None, n_b=None):
        p = np.asarray(p, dtype=float)
        n_a = p.size if n_a is None else n_a
        n_b = p.size if n_b is None else n_b
        return cls(n_a, n_b, p)

    @classmethod
    def maximal(cls, n):
        return cls(n, n, np.full(n, 1.0 / n))

    @property
    def n(self):
        return self.p.size

    @property
    def p_min(self):
        return float(self.p[-1])

    def vector(self):
        """State vector in the Schmidt product basis, A index major."""
        psi = np.zeros((self.n_a, self.n_b), dtype=complex)
        idx = np.arange(self.n)
        psi[idx, idx] = np.sqrt(self.p)
        return psi.reshape(-1)


@dataclass(frozen=True)
class EntanglementMeasures:
    renyi2: float
    scaled_e2: float
    delta_e2: float
    p_min: float


def schmidt_from_vector(psi, n_a, n_b):
    """Schmidt decomposition of a normalized vector on ``C^n_a (x) C^n_b``.

    Returns ``(state, u, vh)`` with ``psi = sum_i sqrt(p_i) u[:, i] (x) vh[i, :]``
    so the columns of ``u`` and rows of ``vh`` are the Schmidt vectors.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != n_a * n_b:
        raise ValueError(f"vector of length {psi.size} does not match {n_a}x{n_b}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state is not normalized (norm {norm!r})")
    u, s, vh = np.linalg.svd(psi.reshape(n_a, n_b))
    p = s**2
    p = p / p.sum()
    return SchmidtState(n_a, n_b, p), u, vh


def _measures_from_p(p):
    n = p.size
    purity = float(np.sum(p**2))
    delta = purity - 1.0 / n
    if n == 1:
        scaled = 0.0
    else:
        scaled = (1.0 - purity) / (1.0 - 1.0 / n)
    return purity, scaled, delta


def measures(s):
    """Renyi-2 entropy (nats), scaled entanglement, its deficit, and ``p_min``."""
    purity, scaled, delta = _measures_from_p(s.p)
    return EntanglementMeasures(
        renyi2=float(-np.log(purity)),
        scaled_e2=float(scaled),
        delta_e2=float(delta),
        p_min=s.p_min,
    )


def delta_e2(p):
    """``sum p^2 - 1/N``, zero exactly at maximal entanglement."""
    p = np.asarray(p, dtype=float)
    return float(np.sum(p**2) - 1.0 / p.size)


def psi_operator(s):
    """``diag(sqrt(p))``, the square root of either reduced density matrix."""
    return np.diag(np.sqrt(s.p)).astype(complex)


def _gibbs(lam, beta):
    x = -beta * lam
    x = x - x.max()
    w = np.exp(x)
    return w / w.sum()


def sample_schmidt_fixed_e2(n, target_delta_e2, rng, max_iter=200):
    """Random Schmidt weights ``p_i ~ exp(-beta lambda_i)`` at a fixed deficit.

    ``lambda`` is i.i.d. standard normal, centered; ``beta >= 0`` is found by
    bracketing and root finding so the deficit matches to 1e-10 absolute.
    """
    hi_limit = 1.0 - 1.0 / n
    if not 0.0 <= target_delta_e2 <= hi_limit:
        raise ValueError(
            f"target delta_e2={target_delta_e2!r} outside reachable range [0, {hi_limit!r}]"
        )
    lam = rng.standard_normal(n)
    lam = lam - lam.mean()
    if target_delta_e2 == 0.0:
        return SchmidtState(n, n, np.full(n, 1.0 / n))
    if target_delta_e2 == hi_limit:
        # beta = inf: a product state
        return SchmidtState(n, n, np.eye(n)[np.argmin(lam)])

    def f(beta):
        return delta_e2(_gibbs(lam, beta)) - target_delta_e2

    # as beta -> inf the weights concentrate on argmin(lambda) and the deficit -> 1 - 1/n
    beta_hi = 1.0
    it = 0
    while f(beta_hi) < 0:
        beta_hi *= 2.0
        it += 1
        if it > max_iter or not np.isfinite(beta_hi):
            raise ValueError(f"cannot reach delta_e2={target_delta_e2!r} for n={n}")
    beta = brentq(f, 0.0, beta_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    p = _gibbs(lam, beta)
    state = SchmidtState(n, n, p / p.sum())
    if abs(measures(state).delta_e2 - target_delta_e2) > 1e-10:
        raise ValueError(f"root finding missed delta_e2={target_delta_e2!r} for n={n}")
    return state


def haar_state(dim, rng):
    """Haar-random pure state vector of length ``dim``."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)
