"""Fractional (Atangana-Baleanu-Caputo) human-rodent monkeypox toolkit.

Simulation, analytic checks and optimal vaccination/treatment/quarantine
schedules for an eight-compartment model.
"""

from .frac_solver import (
    CorrectorSign,
    Grid,
    KernelNormalization,
    NonlocalTerm,
    SchemeOptions,
    Trajectory,
    solve_backward,
    solve_forward,
)
from .model import ControlVector, ModelParams, StateVector, effective_params, make_rhs, rhs_controlled
from .analysis import (
    basic_reproduction_number,
    contraction_certificate,
    disease_free_equilibrium,
    endemic_equilibrium,
    jacobian_at,
    next_generation_radius,
    stability_check,
)
from .optimal_control import SweepOptions, Weights, fbsm_solve, objective
from .special_functions import gamma, ml_one, ml_two

__version__ = "0.1.0"

__all__ = [
    "CorrectorSign", "Grid", "KernelNormalization", "NonlocalTerm", "SchemeOptions",
    "Trajectory", "solve_backward", "solve_forward",
    "ControlVector", "ModelParams", "StateVector", "effective_params", "make_rhs",
    "rhs_controlled",
    "basic_reproduction_number", "contraction_certificate", "disease_free_equilibrium",
    "endemic_equilibrium", "jacobian_at", "next_generation_radius", "stability_check",
    "SweepOptions", "Weights", "fbsm_solve", "objective",
    "gamma", "ml_one", "ml_two",
]
