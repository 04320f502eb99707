"""Equilibria, reproduction numbers and the fractional stability test.

Prints the disease-free and endemic states for the default parameters at a few
orders, and contrasts the human-only R0 with the full next-generation radius.
"""

from mpox_abc.analysis import (
    basic_reproduction_number,
    disease_free_equilibrium,
    endemic_equilibrium,
    next_generation_radius,
    rodent_reproduction_number,
    stability_at,
)
from mpox_abc.model import ModelParams

for alpha in (1.0, 0.9, 0.8):
    p = ModelParams(alpha=alpha)
    dfe = disease_free_equilibrium(p)
    end = endemic_equilibrium(p)
    v0 = stability_at(p, dfe.state)
    print(f"alpha = {alpha}")
    print(f"  R0 (human) = {basic_reproduction_number(p):.4f}   R0 (rodent) = {rodent_reproduction_number(p):.4f}"
          f"   spectral radius FV^-1 = {next_generation_radius(p):.4f}")
    print(f"  E0: S_h = {dfe.state.S_h:.4f}, S_r = {dfe.state.S_r:.4f}; stable = {v0.stable} (margin {v0.margin:+.3f})")
    if end.exists:
        ve = stability_at(p, end.state)
        print(f"  E*: I_h = {end.state.I_h:.5f}, R_h = {end.state.R_h:.5f}, residual {end.residual:.1e}; "
              f"stable = {ve.stable} (margin {ve.margin:+.3f})")

# pushing transmission down until both thresholds are crossed
low = ModelParams(alpha=0.9, beta_2=0.1, beta_3=0.5)
print(f"\nreduced transmission: R0 = {basic_reproduction_number(low):.3f}, "
      f"E0 stable = {stability_at(low, disease_free_equilibrium(low).state).stable}")
