"""Scalar relaxation x' = -x in the ABC sense, solved numerically and in closed form.

Shows how the fractional order changes the decay: the solution jumps to
1/(1 + (1 - alpha)) immediately and then relaxes like a Mittag-Leffler function.
"""

import numpy as np

from mpox_abc.frac_solver import Grid, linear_relaxation_solution, solve_forward

grid = Grid(5.0, 1e-3)
probe = [0.5, 1.0, 2.0, 5.0]

print(f"{'alpha':>6} " + " ".join(f"t={t:<5}" for t in probe) + "   max |num - exact| on [0.5, 5]")
for alpha in (1.0, 0.9, 0.7, 0.5):
    tr = solve_forward(lambda t, x, u: -x, 1.0, grid, alpha)
    mask = tr.t >= 0.5
    exact = linear_relaxation_solution(tr.t[mask], alpha)
    err = np.max(np.abs(tr.x[mask, 0] - exact))
    vals = [tr.x[int(round(t / grid.h)), 0] for t in probe]
    print(f"{alpha:>6} " + " ".join(f"{v:<7.4f}" for v in vals) + f"   {err:.2e}")
