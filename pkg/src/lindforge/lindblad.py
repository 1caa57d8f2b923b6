"""GKSL generators with locality-constrained jumps ``L = A (x) 1 + 1 (x) B``.

Superoperators act on column-stacked density matrices (see
:mod:`lindforge.linalg`). Everything here is dense.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import linalg
from .linalg import dagger, devectorize, vectorize
from .states import haar_state

DEFAULT_STEADY_TOL = 1e-8


class NotSteadyError(ValueError):
    """The supplied pure state is not stationary under the generator."""


@dataclass(frozen=True)
class JumpOperator:
    """Jump ``sqrt(kappa) * (a (x) 1 + 1 (x) b)``."""

    a: np.ndarray
    b: np.ndarray
    kappa: float = 1.0

    def __post_init__(self):
        a = linalg.as_matrix(self.a, "a")
        b = linalg.as_matrix(self.b, "b")
        if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
            raise ValueError("jump components must be square")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def a_scaled(self):
        return np.sqrt(self.kappa) * self.a

    @property
    def b_scaled(self):
        return np.sqrt(self.kappa) * self.b

    @property
    def rate(self):
        """``|A|^2``: squared largest matrix element of ``sqrt(kappa) a``."""
        return float(self.kappa * np.max(np.abs(self.a)) ** 2) if self.a.size else 0.0

    def operator(self):
        n_a, n_b = self.a.shape[0], self.b.shape[0]
        full = np.kron(self.a, np.eye(n_b)) + np.kron(np.eye(n_a), self.b)
        return np.sqrt(self.kappa) * full


@dataclass(frozen=True)
class Lindbladian:
    """Hamiltonian plus local jumps on ``C^n_a (x) C^n_b``."""

    n_a: int
    n_b: int
    hamiltonian: np.ndarray = None
    jumps: Sequence[JumpOperator] = field(default_factory=tuple)

    def __post_init__(self):
        d = self.n_a * self.n_b
        h = np.zeros((d, d), dtype=complex) if self.hamiltonian is None else self.hamiltonian
        h = linalg.as_matrix(h, "hamiltonian")
        if h.shape != (d, d):
            raise ValueError(f"hamiltonian has shape {h.shape}, expected {(d, d)}")
        if np.max(np.abs(h - dagger(h)), initial=0.0) > 1e-12 * max(1.0, np.abs(h).max(initial=0.0)):
            raise ValueError("hamiltonian is not Hermitian")
        jumps = tuple(self.jumps)
        for j in jumps:
            if j.a.shape[0] != self.n_a or j.b.shape[0] != self.n_b:
                raise ValueError(
                    f"jump with blocks {j.a.shape}, {j.b.shape} does not fit dims ({self.n_a}, {self.n_b})"
                )
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self):
        return self.n_a * self.n_b

    @property
    def m(self):
        return len(self.jumps)

    @property
    def kappa_bar(self):
        """Mean of the per-jump rates ``|A_mu|^2``."""
        return float(np.mean([j.rate for j in self.jumps])) if self.jumps else 0.0

    @property
    def rate_scale(self):
        """Scale for absolute tolerances; falls back to 1 without dissipation."""
        k = self.kappa_bar
        return k if k > 0 else 1.0

    def jump_matrices(self):
        return [j.operator() for j in self.jumps]

    def with_jumps(self, jumps):
        return Lindbladian(self.n_a, self.n_b, self.hamiltonian, tuple(jumps))

    def apply(self, rho):
        """Generator action on a density matrix, evaluated directly."""
        rho = np.asarray(rho, dtype=complex)
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for L in self.jump_matrices():
            ld = dagger(L)
            ldl = ld @ L
            out += L @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
        return out

    def apply_adjoint(self, x):
        """Heisenberg-picture generator, the Hilbert-Schmidt adjoint of :meth:`apply`."""
        x = np.asarray(x, dtype=complex)
        h = self.hamiltonian
        out = 1j * (h @ x - x @ h)
        for L in self.jump_matrices():
            ld = dagger(L)
            ldl = ld @ L
            out += ld @ x @ L - 0.5 * (ldl @ x + x @ ldl)
        return out


def build_superoperator(l):
    """Dense ``D^2 x D^2`` matrix of the generator in column-stacking order."""
    d = l.dim
    eye = np.eye(d)
    h = l.hamiltonian
    s = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for L in l.jump_matrices():
        if L.shape != (d, d):
            raise ValueError(f"jump of shape {L.shape} does not match dimension {d}")
        ldl = dagger(L) @ L
        s += np.kron(L.conj(), L)
        s -= 0.5 * np.kron(eye, ldl)
        s -= 0.5 * np.kron(ldl.T, eye)
    return s


def hermitian_basis_real(s, d):
    """Similarity transform of a Hermiticity-preserving superoperator to a real matrix.

    The basis is ``E_ii``, ``(E_ij + E_ji)/sqrt2`` and ``i(E_ij - E_ji)/sqrt2``
    (``i < j``), orthonormal under the Hilbert-Schmidt product, so the
    spectrum is unchanged.
    """
    iu, ju = np.triu_indices(d, 1)
    diag = np.arange(d) * (d + 1)
    p = ju * d + iu  # vec index of E_ij
    q = iu * d + ju  # vec index of E_ji
    r2 = np.sqrt(0.5)

    cols = np.empty_like(s)
    nd, nu = d, p.size
    cols[:, :nd] = s[:, diag]
    cols[:, nd : nd + nu] = r2 * (s[:, p] + s[:, q])
    cols[:, nd + nu :] = 1j * r2 * (s[:, p] - s[:, q])
    out = np.empty(s.shape, dtype=complex)
    out[:nd] = cols[diag]
    out[nd : nd + nu] = r2 * (cols[p] + cols[q])
    out[nd + nu :] = -1j * r2 * (cols[p] - cols[q])
    scale = np.abs(out).max(initial=1.0)
    if np.abs(out.imag).max(initial=0.0) > 1e-9 * scale:
        raise ValueError("superoperator does not preserve Hermiticity")
    return np.ascontiguousarray(out.real)


@dataclass(frozen=True)
class SpectrumResult:
    """Generator eigenvalues sorted by descending real part.

    ``gap`` follows ``-Re lambda_1`` with ``lambda_0 = 0``: it is 0 whenever the
    steady block is degenerate. ``first_decay`` is ``-Re`` of the first
    eigenvalue outside the steady block regardless of degeneracy.
    ``residual_max`` is NaN when eigenvectors were not computed.
    """

    eigenvalues: np.ndarray
    steady_count: int
    gap: float
    first_decay: float
    residual_max: float
    tol: float

    @property
    def nonsteady(self):
        return self.eigenvalues[self.steady_count :]


def steady_first_order(values, tol_abs):
    """Permutation moving the steady block ``|lambda| <= tol_abs`` to the front, stably."""
    steady = np.abs(values) <= tol_abs
    return np.concatenate([np.flatnonzero(steady), np.flatnonzero(~steady)])


def summarize(values, tol_abs, residual_max=float("nan"), tol=DEFAULT_STEADY_TOL):
    """Build a :class:`SpectrumResult` from eigenvalues sorted by descending real part."""
    # purely imaginary eigenvalues can precede the steady block in the sort
    order = steady_first_order(values, tol_abs)
    values = values[order]
    steady = np.abs(values) <= tol_abs
    count = int(steady.sum())
    rest = values[count:]
    first_decay = float(max(-rest[0].real, 0.0)) if rest.size else 0.0
    gap = 0.0 if count >= 2 else first_decay
    return SpectrumResult(values, count, gap, first_decay, residual_max, tol)


def spectrum(l, tol=DEFAULT_STEADY_TOL, vectors=True, superop=None):
    """Eigenvalues, steady-block size and dissipative gap.

    With ``vectors=False`` only eigenvalues are computed, on the real
    Hermitian-basis representation, which is several times cheaper at the
    largest sizes.
    """
    s = build_superoperator(l) if superop is None else superop
    if vectors:
        res = linalg.eig_general(s)
        values, rmax = res.values, res.residual_max
    else:
        values = linalg.eigvals_sorted(hermitian_basis_real(s, l.dim))
        rmax = float("nan")
    return summarize(values, tol * l.rate_scale, rmax, tol)


def _hermitize(x):
    return 0.5 * (x + dagger(x))


def steady_states(l, tol=linalg.DEFAULT_KERNEL_TOL, superop=None):
    """Basis of the generator kernel as Hermitian matrices.

    Members with non-negligible trace are normalized to unit trace.
    """
    s = build_superoperator(l) if superop is None else superop
    kernel = linalg.null_space(s, tol)
    if kernel.shape[1] == 0:
        raise ValueError(f"empty numerical kernel at tol={tol!r}; tolerance too strict?")
    out = []
    for v in kernel.T:
        rho = devectorize(v, l.dim)
        tr = np.trace(rho)
        if abs(tr) > 1e-10:
            rho = rho / tr
        out.append(_hermitize(rho))
    return out


def _check_density(rho, d):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"density matrix has shape {rho.shape}, expected {(d, d)}")
    if np.abs(rho - dagger(rho)).max() > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(_hermitize(rho)).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def evolve(l, rho0, t, superop=None):
    """``exp(L t) rho0`` via the action of the matrix exponential."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    rho0 = _check_density(rho0, l.dim)
    s = build_superoperator(l) if superop is None else superop
    return devectorize(linalg.expm_apply(s, vectorize(rho0), t), l.dim)


def fidelity_to_pure(rho, psi):
    """``<psi|rho|psi>`` clamped into [0, 1]."""
    psi = np.asarray(psi, dtype=complex)
    f = float(np.real(np.vdot(psi, np.asarray(rho) @ psi)))
    if -1e-12 <= f < 0:
        f = 0.0
    elif 1 < f <= 1 + 1e-12:
        f = 1.0
    return f


def is_steady(l, psi, atol=1e-8):
    rho = np.outer(psi, np.conj(psi))
    return np.linalg.norm(l.apply(rho)) <= atol * l.rate_scale


def fidelity_rate(l, rho, psi):
    """``d/dt <psi|rho_t|psi>`` at ``rho_t = rho`` for a steady pure ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    if not is_steady(l, psi):
        raise NotSteadyError("psi is not a steady state of the generator")
    return float(np.real(np.vdot(psi, l.apply(rho) @ psi)))


@dataclass(frozen=True)
class AbsorbingNorms:
    """``||L_mu^dag psi||^2`` per jump and the commutator form ``<psi|[L, L^dag]|psi>``.

    The two agree when ``psi`` is dark; ``dark`` is False when they differ
    by more than 1e-9 for any jump.
    """

    norms: list
    commutator_forms: list
    dark: bool


def absorbing_norms(l, psi):
    psi = np.asarray(psi, dtype=complex)
    norms, forms = [], []
    for L in l.jump_matrices():
        ld_psi = dagger(L) @ psi
        norms.append(float(np.real(np.vdot(ld_psi, ld_psi))))
        comm = L @ dagger(L) - dagger(L) @ L
        forms.append(float(np.real(np.vdot(psi, comm @ psi))))
    dark = all(abs(x - y) <= 1e-9 for x, y in zip(norms, forms))
    return AbsorbingNorms(norms, forms, dark)


@dataclass(frozen=True)
class SymmetryReport:
    hamiltonian_commutator: float
    jump_commutators: list
    symmetry_error: float

    @property
    def max_commutator(self):
        return max([self.hamiltonian_commutator, *self.jump_commutators])


def strong_symmetry_check(l, psi):
    """How close ``|psi><psi|`` is to generating a strong symmetry.

    ``symmetry_error`` is ``tr(L^dag(rho_ss)) = sum_mu <psi|[L_mu, L_mu^dag]|psi>``.
    """
    psi = np.asarray(psi, dtype=complex)
    proj = np.outer(psi, np.conj(psi))
    h = l.hamiltonian
    hc = linalg.hs_norm(proj @ h - h @ proj)
    jc = [linalg.hs_norm(proj @ L - L @ proj) for L in l.jump_matrices()]
    err = float(np.real(np.trace(l.apply_adjoint(proj))))
    return SymmetryReport(hc, jc, err)


def local_split(x, n_a, n_b, atol=1e-10):
    """Write ``x = A (x) 1 + 1 (x) B`` with ``tr B = 0``; error if impossible."""
    x = linalg.as_matrix(x, "operator")
    t = x.reshape(n_a, n_b, n_a, n_b)
    tr_b = np.einsum("ikjk->ij", t)
    tr_a = np.einsum("kikj->ij", t)
    c = np.trace(x) / (n_a * n_b)
    a = tr_b / n_b
    b = tr_a / n_a - c * np.eye(n_b)
    rebuilt = np.kron(a, np.eye(n_b)) + np.kron(np.eye(n_a), b)
    if np.abs(rebuilt - x).max(initial=0.0) > atol * max(1.0, np.abs(x).max(initial=0.0)):
        raise ValueError("operator is not a sum of local A and B operators")
    return a, b


def build_mff(m_op, f_op, n_a, n_b):
    """Unconditional measurement + feedforward generator.

    Measuring ``M`` and feeding the record forward through ``F`` gives the jump
    ``F - iM`` and Hamiltonian ``{F, M}/2``. Both must be sums of local
    operators for the jump to keep the ``A (x) 1 + 1 (x) B`` form.
    """
    m_op = linalg.as_matrix(m_op, "m_op")
    f_op = linalg.as_matrix(f_op, "f_op")
    if m_op.shape != f_op.shape:
        raise ValueError("m_op and f_op must have the same shape")
    for name, op in (("m_op", m_op), ("f_op", f_op)):
        if np.abs(op - dagger(op)).max(initial=0.0) > 1e-12:
            raise ValueError(f"{name} is not Hermitian")
    a, b = local_split(f_op - 1j * m_op, n_a, n_b)
    h = 0.5 * (f_op @ m_op + m_op @ f_op)
    jumps = () if not (np.any(a) or np.any(b)) else (JumpOperator(a, b, 1.0),)
    return Lindbladian(n_a, n_b, _hermitize(h), jumps)


def trace_distance(rho, sigma):
    w = np.linalg.eigvalsh(_hermitize(np.asarray(rho) - np.asarray(sigma)))
    return 0.5 * float(np.abs(w).sum())


def default_probes(dim, rng, n_haar=16):
    """Computational basis projectors plus seeded Haar-random pure states."""
    probes = []
    for k in range(dim):
        rho = np.zeros((dim, dim), dtype=complex)
        rho[k, k] = 1.0
        probes.append(rho)
    for _ in range(n_haar):
        v = haar_state(dim, rng)
        probes.append(np.outer(v, v.conj()))
    return probes


def mixing_time_estimate(l, epsilon, probe_states=None, t_max=100.0, dt=0.01, rng=None,
                         tol=DEFAULT_STEADY_TOL):
    """First grid time at which every probe is within ``epsilon`` of the steady state.

    Only a lower estimate of the true mixing time, which is a supremum over
    all initial states. Returns ``inf`` if not reached by ``t_max``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    s = build_superoperator(l)
    spec = spectrum(l, tol=tol, vectors=False, superop=s)
    if spec.steady_count != 1:
        raise ValueError(f"steady state is not unique (kernel dimension {spec.steady_count})")
    rho_ss = steady_states(l, superop=s)[0]
    if probe_states is None:
        probe_states = default_probes(l.dim, rng if rng is not None else np.random.default_rng(0))
    d = l.dim
    vecs = np.stack([vectorize(_check_density(r, d)) for r in probe_states], axis=1)
    step = scipy.linalg.expm(s * dt)
    n_steps = int(np.ceil(t_max / dt - 1e-9))

    def worst(v):
        return max(trace_distance(devectorize(v[:, k], d), rho_ss) for k in range(v.shape[1]))

    if worst(vecs) <= epsilon:
        return 0.0
    for k in range(1, n_steps + 1):
        vecs = step @ vecs
        if worst(vecs) <= epsilon:
            return k * dt
    return float("inf")
