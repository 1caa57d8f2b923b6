"""Per-realization experiment rows for seeded ensemble sweeps.

Each ``*_row`` function takes an immutable config, a target index and a
realization seed, and returns a tuple matching the kind's CSV columns.
Rows are independent, so they can be computed in any order or process.
"""

import numpy as np

from . import bounds, engineer, lindblad, models
from .linalg import eig_general, eigvals_sorted
from .states import SchmidtState, haar_state, measures, sample_schmidt_fixed_e2

MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One step of the splitmix64 output function on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def sub_seed(master, target_index, realization_index):
    """Seed for one realization, independent of scheduling and worker count."""
    h = splitmix64(master & MASK64)
    h = splitmix64(h ^ (target_index & MASK64))
    return splitmix64(h ^ (realization_index & MASK64))


COLUMNS = {
    "gap-sweep": (
        "seed", "delta_e2_target", "delta_e2_realized", "gap", "gamma_max", "gamma_max_prime",
        "haar_rate_exact", "haar_bound", "symmetry_error", "steady_count", "status",
    ),
    "bound-audit": (
        "seed", "delta_e2_target", "delta_e2_realized", "fidelity_rate", "gamma_max",
        "gamma_max_prime", "worst_case_rate", "violates_gamma_max", "violates_gamma_max_prime",
        "status",
    ),
    "haar-rate": (
        "seed", "delta_e2_target", "delta_e2_realized", "haar_rate_exact", "haar_rate_trace",
        "haar_bound", "predicted_mean", "status",
    ),
    "cqa": (
        "seed", "delta_e2_target", "delta_e2_realized", "local_gap", "full_gap",
        "inclusion_error", "status",
    ),
    "uneven": (
        "seed", "delta_e2_target", "delta_e2_realized", "gap", "reduced_gap", "gamma_uneven",
        "steady_count", "status",
    ),
    "xxz": (
        "seed", "delta_e2_target", "v", "j", "j_z", "steady_count", "gap", "midgap_count",
        "rainbow_residual", "status",
    ),
    "spectrum": ("index", "re_lambda", "im_lambda", "is_midgap", "residual"),
}
COLUMNS["ladder"] = COLUMNS["xxz"]


def _state(cfg, target, rng):
    state = sample_schmidt_fixed_e2(cfg.n, target, rng)
    return state, measures(state).delta_e2


def _kind(cfg):
    return engineer.EnsembleKind(cfg.ensemble, cfg.sigma)


def gap_sweep_row(cfg, target, seed):
    rng = np.random.default_rng(seed)
    state, realized = _state(cfg, target, rng)
    l = engineer.engineered_lindbladian(state, cfg.m, _kind(cfg), rng)
    spec = lindblad.spectrum(l, tol=cfg.tol, vectors=False)
    hr = bounds.haar_rate_exact(l, state)
    return (
        seed, target, realized, spec.gap, bounds.gamma_max(l, state),
        bounds.gamma_max_prime(l, state), hr.rate, bounds.haar_bound(l, state), hr.trace,
        spec.steady_count,
    )


def _random_density(dim, rng):
    # half pure Haar states, half Hilbert-Schmidt mixed states
    if rng.random() < 0.5:
        v = haar_state(dim, rng)
        return np.outer(v, v.conj())
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def bound_audit_row(cfg, target, seed):
    rng = np.random.default_rng(seed)
    state, realized = _state(cfg, target, rng)
    l = engineer.engineered_lindbladian(state, cfg.m, _kind(cfg), rng)
    rho = _random_density(l.dim, rng)
    rate = abs(lindblad.fidelity_rate(l, rho, state.vector()))
    gm = bounds.gamma_max(l, state)
    gp = bounds.gamma_max_prime(l, state)
    return (
        seed, target, realized, rate, gm, gp, bounds.worst_case_rate(l, state),
        int(rate > gm), int(rate > gp),
    )


def haar_rate_row(cfg, target, seed):
    rng = np.random.default_rng(seed)
    state, realized = _state(cfg, target, rng)
    l = engineer.engineered_lindbladian(state, cfg.m, _kind(cfg), rng)
    hr = bounds.haar_rate_exact(l, state)
    pred = bounds.ensemble_predictions(cfg.n, cfg.m, cfg.sigma, realized).mean_haar_rate
    return seed, target, realized, hr.rate, hr.trace_rate, bounds.haar_bound(l, state), pred


def cqa_row(cfg, target, seed):
    rng = np.random.default_rng(seed)
    state, realized = _state(cfg, target, rng)
    kind = engineer.EnsembleKind("detailed_balance", cfg.sigma)
    blocks = [engineer.sample_a(kind, state, rng) for _ in range(cfg.m)]
    res = engineer.cqa_construct(blocks, state)
    full = lindblad.spectrum(res.lindbladian, tol=cfg.tol, vectors=False)
    local = lindblad.spectrum(res.local_lindbladian(blocks), tol=cfg.tol, vectors=False)
    err = max(float(np.min(np.abs(full.eigenvalues - x))) for x in local.eigenvalues)
    return seed, target, realized, local.gap, full.gap, err


def uneven_row(cfg, target, seed):
    rng = np.random.default_rng(seed)
    state, realized = _state(cfg, target, rng)
    spec = engineer.UnevenSpec(cfg.n, cfg.n_b, cfg.sigma_b)
    state_b = SchmidtState(cfg.n, cfg.n_b, state.p)
    l = engineer.uneven_lindbladian(state_b, spec, cfg.m, _kind(cfg), rng)
    s = lindblad.build_superoperator(l)
    full = lindblad.spectrum(l, tol=cfg.tol, vectors=False, superop=s)
    red = engineer.reduced_superoperator(l, superop=s, compress=True)
    red_vals = lindblad.summarize(eigvals_sorted(red), cfg.tol * l.rate_scale, tol=cfg.tol)
    return (
        seed, target, realized, full.gap, red_vals.gap, bounds.gamma_uneven(l, state_b, spec),
        full.steady_count,
    )


def chain_spec(cfg, target):
    v = cfg.v if cfg.v is not None else models.rainbow_v_for_delta_e2(cfg.chain_n, target)
    return models.ChainSpec(cfg.chain_n, cfg.j, cfg.j_z, v)


def chain_lindbladian(cfg, spec):
    build = models.ladder_lindbladian if cfg.model == "ladder" else models.xxz_lindbladian
    return build(spec)


def chain_row(cfg, target, seed):
    spec = chain_spec(cfg, target)
    l = chain_lindbladian(cfg, spec)
    res = lindblad.spectrum(l, tol=cfg.tol, vectors=False)
    psi = models.rainbow_state(spec.n, spec.v)
    resid = float(np.linalg.norm(l.apply(np.outer(psi, psi.conj()))))
    return (
        seed, target, spec.v, spec.j, spec.j_z, res.steady_count, res.gap,
        models.count_midgap(res, cfg.bulk_fraction), resid,
    )


ROW_FUNCS = {
    "gap-sweep": gap_sweep_row,
    "bound-audit": bound_audit_row,
    "haar-rate": haar_rate_row,
    "cqa": cqa_row,
    "uneven": uneven_row,
    "xxz": chain_row,
    "ladder": chain_row,
}


def run_task(task):
    """Worker entry point: ``(cfg, t_idx, r_idx, target, seed)`` to a sortable row."""
    cfg, t_idx, r_idx, target, seed = task
    ncols = len(COLUMNS[cfg.kind])
    try:
        row = ROW_FUNCS[cfg.kind](cfg, target, seed) + ("ok",)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        row = (seed, target) + (float("nan"),) * (ncols - 3) + (type(exc).__name__,)
    return (t_idx, r_idx), row


def spectrum_rows(cfg):
    """Eigenvalue table for a single instance; returns ``(rows, midgap_count, steady_count)``."""
    seed = sub_seed(cfg.seed, 0, 0)
    target = cfg.delta_e2[0]
    if cfg.model in ("xxz", "ladder"):
        l = chain_lindbladian(cfg, chain_spec(cfg, target))
    else:
        rng = np.random.default_rng(seed)
        state, _ = _state(cfg, target, rng)
        if cfg.model == "cqa":
            kind = engineer.EnsembleKind("detailed_balance", cfg.sigma)
            blocks = [engineer.sample_a(kind, state, rng) for _ in range(cfg.m)]
            l = engineer.cqa_construct(blocks, state).lindbladian
        else:
            l = engineer.engineered_lindbladian(state, cfg.m, _kind(cfg), rng)
    s = lindblad.build_superoperator(l)
    eig = eig_general(s)
    tol_abs = cfg.tol * l.rate_scale
    res = lindblad.summarize(eig.values, tol_abs, eig.residual_max, cfg.tol)
    residuals = eig.residuals[lindblad.steady_first_order(eig.values, tol_abs)]
    mask = models.midgap_mask(res, cfg.bulk_fraction)
    rows = [
        (k, float(lam.real), float(lam.imag), int(mask[k]), float(residuals[k]))
        for k, lam in enumerate(res.eigenvalues)
    ]
    return rows, int(mask.sum()), res.steady_count
