"""Closed-form rate bounds and ensemble predictions for engineered generators.

Jump blocks are read in the Schmidt basis of the target state; use
:func:`to_schmidt_frame` first if a generator was built in another basis.
Per-jump rates follow ``kappa_mu = |A_mu|^2`` with ``|A_mu|`` the largest
matrix-element magnitude of ``sqrt(kappa) a``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lindblad import JumpOperator, Lindbladian
from .linalg import dagger
from .states import measures

P_MIN_FLOOR = 1e-12


def to_schmidt_frame(l, u, vh):
    """Rotate a generator into the Schmidt basis returned by ``schmidt_from_vector``."""
    w = vh.T
    jumps = tuple(
        JumpOperator(dagger(u) @ j.a @ u, dagger(w) @ j.b @ w, j.kappa) for j in l.jumps
    )
    uw = np.kron(u, w)
    return Lindbladian(l.n_a, l.n_b, dagger(uw) @ l.hamiltonian @ uw, jumps)


def _full_rank(state, what):
    if state.p_min <= P_MIN_FLOOR:
        raise ValueError(
            f"{what} needs a full-rank state (p_min={state.p_min:.3e}); use gamma_max_prime"
        )


def _rate_sum(l):
    # M * kappa_bar
    return float(sum(j.rate for j in l.jumps))


def gamma_max(l, state):
    """Largest possible ``|dF/dt|`` towards a full-rank pure steady state."""
    _full_rank(state, "gamma_max")
    n = state.n
    one_minus_e2 = 1.0 - measures(state).scaled_e2
    return _rate_sum(l) * np.sqrt(2.0) * (n - 1) / state.p_min * one_minus_e2


def gamma_max_prime(l, state):
    """Rank-agnostic rate bound, scaling as the square root of the entanglement deficit."""
    n = state.n
    one_minus_e2 = max(1.0 - measures(state).scaled_e2, 0.0)
    sum_a = sum(np.sqrt(j.kappa) * np.abs(j.a).max(initial=0.0) for j in l.jumps)
    sum_b = sum(np.sqrt(j.kappa) * np.abs(j.b).max(initial=0.0) for j in l.jumps)
    return float(np.sqrt(2.0 * (n**3 - n**2)) * (sum_a**2 + sum_b**2) * np.sqrt(one_minus_e2))


def coupling_block_norms(l, n_a):
    """Largest singular value of the block of each ``B_mu`` feeding extra levels into Schmidt levels."""
    return [
        float(np.linalg.norm(j.b_scaled[:n_a, n_a:], 2)) if j.b.shape[0] > n_a else 0.0
        for j in l.jumps
    ]


def gamma_uneven(l, state, spec):
    """Rate bound when B has ``spec.n_b - spec.n_a`` extra levels."""
    _full_rank(state, "gamma_uneven")
    n = state.n
    de2 = measures(state).delta_e2
    standard = np.sqrt(2.0) * n / state.p_min * _rate_sum(l) * de2
    extra = sum(x**2 for x in coupling_block_norms(l, spec.n_a))
    return float(standard + extra)


@dataclass(frozen=True)
class HaarRate:
    """Haar-averaged fidelity growth rate, from the double sum and from the trace form."""

    rate: float
    trace_rate: float
    trace: float


def _double_sum(l, state):
    p = state.p
    w = (p[:, None] - p[None, :]) ** 2 / p[:, None]
    return float(sum(np.sum(np.abs(j.a_scaled) ** 2 * w) for j in l.jumps))


def steady_adjoint_trace(l, state):
    """``tr(L^dag(rho_ss))``, computed from the operators directly."""
    psi = state.vector()
    total = 0.0
    for L in l.jump_matrices():
        v = dagger(L) @ psi
        total += float(np.real(np.vdot(v, v)))
    # the Hamiltonian part tr(i[H, rho]) vanishes identically
    return total


def haar_rate_exact(l, state, rtol=1e-10):
    """Average of ``dF/dt`` over Haar-random pure states.

    The double sum over ``|A_jk|^2 (p_j - p_k)^2 / p_j`` and the operator
    trace ``tr(L^dag(rho_ss)) / D`` are both evaluated; a disagreement beyond
    ``rtol`` means the jumps are not dark on the state or not in its
    Schmidt basis.
    """
    _full_rank(state, "haar_rate_exact")
    d = l.dim
    ds = _double_sum(l, state)
    tr = steady_adjoint_trace(l, state)
    if abs(ds - tr) > rtol * max(abs(ds), abs(tr)) + 1e-14 * max(l.kappa_bar, 1.0):
        raise ValueError(
            f"double sum {ds!r} disagrees with tr(L^dag rho_ss) {tr!r}; jumps not engineered for this state?"
        )
    return HaarRate(rate=ds / d, trace_rate=tr / d, trace=tr)


def haar_bound(l, state):
    """Upper bound on the Haar-averaged fidelity rate."""
    _full_rank(state, "haar_bound")
    n = state.n
    one_minus_e2 = 1.0 - measures(state).scaled_e2
    return float(2.0 * _rate_sum(l) * (n - 1) / n**2 / state.p_min * one_minus_e2)


def worst_case_rate(l, state):
    """``max_rho dF/dt``: the top eigenvalue of ``L^dag(rho_ss)``, which is PSD for a dark state."""
    psi = state.vector()
    x = l.apply_adjoint(np.outer(psi, psi.conj()))
    return float(np.linalg.eigvalsh(0.5 * (x + dagger(x)))[-1])


@dataclass(frozen=True)
class EnsemblePrediction:
    mean_gap: float
    var_gap: float
    mean_haar_rate: float


def ensemble_predictions(n, m, sigma, delta_e2):
    """Leading-order ensemble mean/variance of the gap and mean Haar rate.

    Independent of ``n`` at this order; the variance constant is set to 1.
    """
    if m < 1:
        raise ValueError("need at least one jump")
    s2 = sigma**2
    return EnsemblePrediction(
        mean_gap=2.0 * (m - 1) * s2 * delta_e2,
        var_gap=(m - 1) * s2**2 * delta_e2**2,
        mean_haar_rate=2.0 * m * s2 * delta_e2,
    )


def mixing_lower_bound(gamma, epsilon):
    """``(1 - epsilon) / gamma``; infinite when ``gamma == 0``."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0:
        return float("inf")
    return (1.0 - epsilon) / gamma


def perturbative_gap(l, state, normalized=False):
    """First-order splitting of the two-fold steady block near maximal entanglement.

    Returns ``tr(L^dag(rho_ss))``, equal to ``D`` times the Haar rate. With
    ``normalized=True`` the right vector ``(1 - rho_ss)`` is normalized
    against the identity left vector, giving ``tr(L^dag(rho_ss)) / (D - 1)``,
    which is the quantity that tracks the measured gap.
    """
    hr = haar_rate_exact(l, state)
    gamma = hr.trace
    if abs(gamma - l.dim * hr.rate) > 1e-10 * max(abs(gamma), 1e-300):
        raise ValueError("trace form and D * Haar rate disagree")
    return gamma / (l.dim - 1) if normalized else gamma


@dataclass(frozen=True)
class BoundReport:
    gamma_max: float
    gamma_max_prime: float
    gamma_uneven: Optional[float]
    haar_bound: float
    haar_rate_exact: float
    mixing_lower: float
    symmetry_error: float
    ensemble_mean_gap: float
    ensemble_var_gap: float


def bound_report(l, state, epsilon=0.1, sigma=1.0, spec=None):
    gm = gamma_max(l, state)
    hr = haar_rate_exact(l, state)
    pred = ensemble_predictions(state.n, l.m, sigma, measures(state).delta_e2)
    return BoundReport(
        gamma_max=gm,
        gamma_max_prime=gamma_max_prime(l, state),
        gamma_uneven=None if spec is None else gamma_uneven(l, state, spec),
        haar_bound=haar_bound(l, state),
        haar_rate_exact=hr.rate,
        mixing_lower=mixing_lower_bound(gm, epsilon),
        symmetry_error=hr.trace,
        ensemble_mean_gap=pred.mean_gap,
        ensemble_var_gap=pred.var_gap,
    )
