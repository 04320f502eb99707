"""Optimality system and forward-backward sweep.

Objective::

    J = int_0^tf  E_h + I_h + w1/2 u1^2 + w2/2 u2^2 + w3/2 u3^2  dt

Hamiltonian ``H = E_h + I_h + sum w_i/2 u_i^2 + sum lambda_i G_i``. The
costates obey right-ABC equations with right-hand side ``dH/dX`` and zero
terminal values; the controls minimise ``H`` pointwise over ``[0, 0.9]^3``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .frac_solver import (
    Grid,
    KernelNormalization,
    SchemeOptions,
    Trajectory,
    solve_backward,
    solve_forward,
)
from .model import (
    E_H,
    I_H,
    Q_H,
    R_H,
    S_H,
    U_MAX,
    ModelParams,
    StateVector,
    _as_control,
    _as_state,
    effective_params,
    make_rhs,
    model_jacobian,
    rhs_controlled,
)

__all__ = [
    "Weights",
    "ControlSign",
    "SweepOptions",
    "OptimalSolution",
    "objective",
    "running_cost",
    "hamiltonian",
    "costate_rhs",
    "CostateRHS",
    "control_update",
    "fbsm_solve",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Weights:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_array(self):
        return np.array([self.w1, self.w2, self.w3])


class ControlSign(str, enum.Enum):
    STATIONARITY_MINUS = "stationarity_minus"
    PAPER_PLUS = "paper_plus"


@dataclass(frozen=True)
class SweepOptions:
    max_iters: int = 200
    tol: float = 1e-4
    relaxation: float = 0.5
    strategy_mask: tuple = (True, True, True)
    control_sign: ControlSign = ControlSign.STATIONARITY_MINUS
    verbose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "control_sign", ControlSign(self.control_sign))
        object.__setattr__(self, "strategy_mask", tuple(bool(m) for m in self.strategy_mask))
        if len(self.strategy_mask) != 3:
            raise ValueError("strategy_mask needs three entries")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters >= 1 and tol > 0 required")


@dataclass(frozen=True)
class OptimalSolution:
    state: Trajectory
    costate: Trajectory
    controls: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: tuple = field(default=(), repr=False)
    last_change: float = float("nan")


def running_cost(x, u, w: Weights):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    quad = 0.5 * (u**2) @ w.to_array()
    return x[..., E_H] + x[..., I_H] + quad


def objective(state: Trajectory, controls, w: Weights) -> float:
    """Trapezoidal quadrature of the running cost on the state's grid."""
    t = np.asarray(state.t, dtype=float)
    u = np.zeros((len(t), 3)) if controls is None else np.asarray(controls, dtype=float)
    if u.shape != (len(t), 3):
        raise ValueError(f"controls shape {u.shape} does not match grid of {len(t)} nodes")
    g = running_cost(state.x, u, w)
    return float(np.sum(np.diff(t) * 0.5 * (g[1:] + g[:-1])))


def hamiltonian(X, U, L, p: ModelParams, w: Weights) -> float:
    x = _as_state(X)
    u = _as_control(U)
    lam = np.asarray(L, dtype=float)
    return float(running_cost(x, u, w) + lam @ rhs_controlled(0.0, x, u, p))


def costate_rhs(t, L, X, U, p: ModelParams) -> np.ndarray:
    """``dH/dX``: the right-ABC derivative of the costates.

    ``t`` is unused (autonomous system).
    """
    lam = np.asarray(L, dtype=float)
    g = model_jacobian(X, U, p).T @ lam
    g[E_H] += 1.0
    g[I_H] += 1.0
    return g


class CostateRHS:
    """``costate_rhs`` bound to ``p``, with its (linear) ``lam``-Jacobian."""

    def __init__(self, p: ModelParams):
        self.params = effective_params(p)

    def __call__(self, t, lam, x, u):
        return costate_rhs(t, lam, x, u, self.params)

    def jacobian(self, t, lam, x, u):
        return model_jacobian(x, u, self.params).T


def control_update(L, X, w: Weights, options: SweepOptions = SweepOptions()) -> np.ndarray:
    """Pointwise minimiser of ``H`` over the admissible box.

    Accepts single nodes or stacked ``(n, 8)`` arrays; returns ``(..., 3)``.
    """
    lam = np.asarray(L, dtype=float)
    x = np.asarray(X, dtype=float)
    if options.control_sign is ControlSign.STATIONARITY_MINUS:
        d1 = lam[..., S_H] - lam[..., R_H]
        d2 = lam[..., I_H] - lam[..., R_H]
        d3 = lam[..., I_H] - lam[..., Q_H]
    else:
        d1 = lam[..., S_H] + lam[..., R_H]
        d2 = lam[..., I_H] + lam[..., R_H]
        d3 = lam[..., I_H] + lam[..., Q_H]
    raw = np.stack(
        [d1 * x[..., S_H] / w.w1, d2 * x[..., I_H] / w.w2, d3 * x[..., I_H] / w.w3],
        axis=-1,
    )
    u = np.clip(raw, 0.0, U_MAX)
    return u * np.asarray(options.strategy_mask, dtype=float)


def _sweep_pair(p, f, g, x0, grid, U, norm, scheme):
    state = solve_forward(f, x0, grid, p.alpha, U, norm, scheme)
    costate = solve_backward(g, np.zeros(8), grid, p.alpha, state, U, norm, scheme)
    return state, costate


def fbsm_solve(
    p: ModelParams,
    x0=StateVector(),
    grid: Grid = Grid(),
    w: Weights = Weights(),
    norm: KernelNormalization = KernelNormalization.UNIT,
    scheme: SchemeOptions = SchemeOptions(),
    options: SweepOptions = SweepOptions(),
) -> OptimalSolution:
    """Forward-backward sweep with relaxed projected control updates.

    Starts from ``U = 0``. Stops when ``max |dU| / max(|U|, 1e-3)`` over all
    nodes and controls falls below ``options.tol``; otherwise returns the last
    iterate with ``converged = False``.
    """
    q = effective_params(p)
    x0 = _as_state(x0)
    f = make_rhs(q)
    g = CostateRHS(q)

    U = np.zeros((grid.N + 1, 3))
    theta = options.relaxation
    history = []
    converged = False
    change = float("nan")
    emit = log.info if options.verbose else log.debug
    it = 0
    for it in range(1, options.max_iters + 1):
        state, costate = _sweep_pair(q, f, g, x0, grid, U, norm, scheme)
        history.append(objective(state, U, w))
        candidate = control_update(costate.x, state.x, w, options)
        U_new = (1.0 - theta) * U + theta * candidate
        change = float(np.max(np.abs(U_new - U) / np.maximum(np.abs(U_new), 1e-3)))
        emit("iter %d  J = %.10g  max change = %.3e", it, history[-1], change)
        U = U_new
        if change < options.tol:
            converged = True
            break
    state, costate = _sweep_pair(q, f, g, x0, grid, U, norm, scheme)
    J = objective(state, U, w)
    U.setflags(write=False)
    return OptimalSolution(state, costate, U, J, it, converged, tuple(history), change)
