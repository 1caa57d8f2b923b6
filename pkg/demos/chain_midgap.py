"""Rainbow steady states and slow midgap modes of the boundary-driven chains.

Run: python demos/chain_midgap.py
"""

import numpy as np

from lindforge import lindblad, models

v = models.rainbow_v_for_delta_e2(2, 1e-3)
psi = models.rainbow_state(2, v)
for name, build in (("xxz", models.xxz_lindbladian), ("ladder", models.ladder_lindbladian)):
    for j_z in (0.0, 0.5, 1.0):
        l = build(models.ChainSpec(2, j=1.0, j_z=j_z, v=v))
        res = lindblad.spectrum(l, vectors=False)
        resid = np.linalg.norm(l.apply(np.outer(psi, psi.conj())))
        slow = " ".join(f"{x:.2e}" for x in np.sort(-res.nonsteady.real)[:3])
        print(f"{name:6s} J_z={j_z:.1f}  residual={resid:.1e}  midgap={models.count_midgap(res)}  "
              f"slowest rates={slow}")
