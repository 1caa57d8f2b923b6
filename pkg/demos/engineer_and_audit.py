"""Engineer local jumps for a chosen entangled state and compare rates with bounds.

Run: python demos/engineer_and_audit.py
"""

import numpy as np

from lindforge import bounds, engineer, lindblad
from lindforge.states import measures, sample_schmidt_fixed_e2

rng = np.random.default_rng(1)
kind = engineer.EnsembleKind("ginibre", 1.0)

for target in (1e-3, 1e-2, 1e-1):
    state = sample_schmidt_fixed_e2(3, target, rng)
    l = engineer.engineered_lindbladian(state, 2, kind, rng)
    spec = lindblad.spectrum(l, vectors=False)
    rep = bounds.bound_report(l, state)
    print(f"delta_e2={measures(state).delta_e2:.1e}  gap={spec.gap:.3e}  "
          f"predicted={rep.ensemble_mean_gap:.3e}  gamma_max={rep.gamma_max:.3e}  "
          f"worst-case rate={bounds.worst_case_rate(l, state):.3e}")

# a maximally entangled target cannot be reached: the steady block is degenerate
state = sample_schmidt_fixed_e2(3, 0.0, rng)
l = engineer.engineered_lindbladian(state, 2, kind, rng)
print("maximal target, steady states:", lindblad.spectrum(l, vectors=False).steady_count)
