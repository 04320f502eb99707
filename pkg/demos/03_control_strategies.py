"""Forward-backward sweep for the single, double and triple control strategies.

Roughly one minute on one core. Writes nothing; see ``mpox-abc compare`` for
CSV and SVG output.
"""

import numpy as np

from mpox_abc import ModelParams, StateVector, SweepOptions, fbsm_solve
from mpox_abc.cli import STRATEGY_MASKS

p = ModelParams(alpha=0.9)
rows = []
for sid, mask in STRATEGY_MASKS.items():
    sol = fbsm_solve(p, StateVector(), options=SweepOptions(strategy_mask=mask))
    x = sol.state.x
    rows.append((sol.objective, sid, float(np.max(x[1:, 2])), float(x[-1, 2]), sol.iterations, sol.converged))

print(f"{'strategy':>12} {'J':>9} {'max I_h (t>0)':>14} {'I_h(36)':>9} {'iters':>6}")
for J, sid, peak, final, it, ok in sorted(rows):
    flag = "" if ok else "  (not converged)"
    print(f"{sid:>12} {J:9.4f} {peak:14.5f} {final:9.5f} {it:6d}{flag}")
