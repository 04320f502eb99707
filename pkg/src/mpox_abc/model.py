"""Controlled fractional human-rodent monkeypox model.

State ordering used everywhere (arrays of length 8)::

    0 S_h  1 E_h  2 I_h  3 Q_h  4 R_h  5 S_r  6 E_r  7 I_r

Controls are ``(u1, u2, u3)`` = (vaccination, treatment, quarantine).

Every named rate enters the fractional system raised to the power alpha, so
that both sides carry units of time^-alpha; the controls appear bare.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

__all__ = [
    "COMPARTMENTS",
    "RATE_NAMES",
    "U_MAX",
    "ModelParams",
    "StateVector",
    "ControlVector",
    "SingularPopulationError",
    "StateReport",
    "effective_params",
    "force_of_infection",
    "rhs_controlled",
    "make_rhs",
    "model_jacobian",
    "ModelRHS",
    "population_bounds",
    "validate_state",
    "DEFAULT_INITIAL_STATE",
]

COMPARTMENTS = ("S_h", "E_h", "I_h", "Q_h", "R_h", "S_r", "E_r", "I_r")
S_H, E_H, I_H, Q_H, R_H, S_R, E_R, I_R = range(8)
U_MAX = 0.9
N_MIN = 1e-12

RATE_NAMES = (
    "theta_h", "theta_r",
    "beta_1", "beta_2", "beta_3",
    "alpha_1", "alpha_2", "alpha_3",
    "phi", "tau", "gamma",
    "mu_h", "mu_r",
    "delta_h", "delta_r",
)


class SingularPopulationError(ZeroDivisionError):
    """Total human or rodent population too small to normalise incidence."""


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates (per month) and the fractional order.

    Defaults are the simulation values used for the strategy comparisons.
    ``effective`` marks a parameter set whose rates have already been raised
    to the power ``alpha``; see :func:`effective_params`.
    """

    theta_h: float = 0.029
    theta_r: float = 0.2
    beta_1: float = 0.00025
    beta_2: float = 9.0
    beta_3: float = 6.0
    alpha_1: float = 0.3
    alpha_2: float = 2.0
    alpha_3: float = 0.2
    phi: float = 2.0
    tau: float = 0.52
    gamma: float = 1.0 / 21.0
    mu_h: float = 0.02
    mu_r: float = 1.5
    delta_h: float = 0.2
    delta_r: float = 0.5
    alpha: float = 0.9
    effective: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in RATE_NAMES:
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be a finite non-negative rate, got {v}")
        if not (self.mu_h > 0 and self.mu_r > 0):
            raise ValueError("natural death rates mu_h and mu_r must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    def with_alpha(self, alpha: float) -> "ModelParams":
        if self.effective:
            raise ValueError("cannot change alpha of an already exponentiated set")
        return replace(self, alpha=alpha)

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in fields(cls) if f.name != "effective")


@dataclass(frozen=True)
class StateVector:
    """Compartment densities for humans and rodents."""

    S_h: float = 0.8
    E_h: float = 0.1
    I_h: float = 0.1
    Q_h: float = 0.0
    R_h: float = 0.0
    S_r: float = 0.8
    E_r: float = 0.15
    I_r: float = 0.05

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in COMPARTMENTS], dtype=float)

    @classmethod
    def from_array(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (8,):
            raise ValueError(f"expected 8 compartments, got shape {x.shape}")
        return cls(*map(float, x))

    @property
    def N_h(self) -> float:
        return self.S_h + self.E_h + self.I_h + self.Q_h + self.R_h

    @property
    def N_r(self) -> float:
        return self.S_r + self.E_r + self.I_r


DEFAULT_INITIAL_STATE = StateVector()


@dataclass(frozen=True)
class ControlVector:
    """Time-frozen control values, each in ``[0, 0.9]``."""

    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0

    def __post_init__(self):
        for name in ("u1", "u2", "u3"):
            v = getattr(self, name)
            if not 0.0 <= v <= U_MAX:
                raise ValueError(f"{name} = {v} outside the admissible box [0, {U_MAX}]")

    def to_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3], dtype=float)


def effective_params(p: ModelParams) -> ModelParams:
    """Raise every rate to the power ``alpha`` (idempotent)."""
    if p.effective:
        return p
    a = p.alpha
    powered = {name: getattr(p, name) ** a for name in RATE_NAMES}
    return replace(p, effective=True, **powered)


def _as_state(X):
    if isinstance(X, StateVector):
        return X.to_array()
    return np.asarray(X, dtype=float)


def _as_control(U):
    if U is None:
        return np.zeros(3)
    if isinstance(U, ControlVector):
        return U.to_array()
    return np.asarray(U, dtype=float)


def _totals(x):
    n_h = x[S_H] + x[E_H] + x[I_H] + x[Q_H] + x[R_H]
    n_r = x[S_R] + x[E_R] + x[I_R]
    if n_h < N_MIN or n_r < N_MIN:
        raise SingularPopulationError(
            f"population totals N_h = {n_h:.3e}, N_r = {n_r:.3e} below {N_MIN:g}"
        )
    return n_h, n_r


def force_of_infection(X, p: ModelParams):
    """Per-capita infection pressures ``(phi_h, phi_r)`` at state ``X``."""
    q = effective_params(p)
    x = _as_state(X)
    n_h, n_r = _totals(x)
    return (q.beta_1 * x[I_R] + q.beta_2 * x[I_H]) / n_h, q.beta_3 * x[I_R] / n_r


def rhs_controlled(t, X, U, p: ModelParams) -> np.ndarray:
    """Kernel values ``G_1..G_8`` of the controlled fractional system.

    ``t`` is accepted for interface symmetry; the system is autonomous.
    """
    q = effective_params(p)
    x = _as_state(X)
    u1, u2, u3 = _as_control(U)
    S, E, I, Q, R, Sr, Er, Ir = x
    n_h, n_r = _totals(x)
    inc_h = (q.beta_1 * Ir + q.beta_2 * I) * S / n_h
    inc_r = q.beta_3 * Sr * Ir / n_r
    return np.array([
        q.theta_h - inc_h - q.mu_h * S + q.phi * Q - u1 * S,
        inc_h - (q.alpha_1 + q.alpha_2 + q.mu_h) * E,
        q.alpha_1 * E - (q.mu_h + q.delta_h + q.gamma) * I - u2 * I - u3 * I,
        q.alpha_2 * E - (q.phi + q.tau + q.mu_h + q.delta_h) * Q + u3 * I,
        q.gamma * I + q.tau * Q - q.mu_h * R + u1 * S + u2 * I,
        q.theta_r - inc_r - q.mu_r * Sr,
        inc_r - (q.mu_r + q.alpha_3) * Er,
        q.alpha_3 * Er - (q.mu_r + q.delta_r) * Ir,
    ])


def model_jacobian(X, U, p: ModelParams) -> np.ndarray:
    """Analytic state Jacobian of the kernel vector ``G_1..G_8``."""
    q = effective_params(p)
    x = _as_state(X)
    u1, u2, u3 = _as_control(U)
    S, E, I, Q, R, Sr, Er, Ir = x
    n_h, n_r = _totals(x)
    lam = q.beta_1 * Ir + q.beta_2 * I
    # incidence P = lam S / N_h
    dP = np.full(5, -lam * S / n_h**2)
    dP[0] += lam / n_h
    dP[2] += q.beta_2 * S / n_h
    dP_ir = q.beta_1 * S / n_h
    # rodent incidence Pr = beta_3 Sr Ir / N_r
    dPr = np.full(3, -q.beta_3 * Sr * Ir / n_r**2)
    dPr[0] += q.beta_3 * Ir / n_r
    dPr[2] += q.beta_3 * Sr / n_r

    J = np.zeros((8, 8))
    J[0, :5] = -dP
    J[0, 7] = -dP_ir
    J[0, 0] -= q.mu_h + u1
    J[0, 3] += q.phi
    J[1, :5] = dP
    J[1, 7] = dP_ir
    J[1, 1] -= q.alpha_1 + q.alpha_2 + q.mu_h
    J[2, 1] = q.alpha_1
    J[2, 2] = -(q.mu_h + q.delta_h + q.gamma + u2 + u3)
    J[3, 1] = q.alpha_2
    J[3, 2] = u3
    J[3, 3] = -(q.phi + q.tau + q.mu_h + q.delta_h)
    J[4, 0] = u1
    J[4, 2] = q.gamma + u2
    J[4, 3] = q.tau
    J[4, 4] = -q.mu_h
    J[5, 5:] = -dPr
    J[5, 5] -= q.mu_r
    J[6, 5:] = dPr
    J[6, 6] -= q.mu_r + q.alpha_3
    J[7, 6] = q.alpha_3
    J[7, 7] = -(q.mu_r + q.delta_r)
    return J


class ModelRHS:
    """Solver-ready ``f(t, x, u)`` with ``p`` exponentiated once.

    Exposes ``jacobian(t, x, u)`` so the implicit predictor can use the
    analytic derivative.
    """

    def __init__(self, p: ModelParams):
        self.params = effective_params(p)

    def __call__(self, t, x, u):
        return rhs_controlled(t, x, u, self.params)

    def jacobian(self, t, x, u):
        return model_jacobian(x, u, self.params)


def make_rhs(p: ModelParams) -> ModelRHS:
    return ModelRHS(p)


def population_bounds(p: ModelParams):
    """Upper bounds ``(theta_h/mu_h, theta_r/mu_r)`` on the totals (powered rates)."""
    q = effective_params(p)
    return q.theta_h / q.mu_h, q.theta_r / q.mu_r


@dataclass
class StateReport:
    """Outcome of :func:`validate_state`.

    ``negative`` holds ``(node, compartment, value)`` triples; ``bound`` holds
    ``(node, "N_h" | "N_r", value, limit)``.
    """

    ok: bool
    negative: list
    bound: list
    notes: list

    def __bool__(self):
        return self.ok


def validate_state(X, p: ModelParams, tol: float = 1e-8, x0=None) -> StateReport:
    """Check positivity and the population bounds along a state or trajectory.

    ``X`` is one state (length 8) or an ``(n, 8)`` array. The bound on a
    species total is only enforced when it already held at ``x0`` (default:
    the first row of ``X``).
    """
    x = np.atleast_2d(_as_state(X))
    first = x[0] if x0 is None else _as_state(x0)
    b_h, b_r = population_bounds(p)
    negative, bound, notes = [], [], []

    bad = np.argwhere(x < -tol)
    for node, comp in bad:
        negative.append((int(node), COMPARTMENTS[comp], float(x[node, comp])))

    n_h = x[:, :5].sum(axis=1)
    n_r = x[:, 5:].sum(axis=1)
    checks = (("N_h", n_h, b_h, first[:5].sum()), ("N_r", n_r, b_r, first[5:].sum()))
    for label, totals, limit, start in checks:
        if start > limit:
            notes.append(f"{label}(0) = {start:g} exceeds {limit:g}; bound not enforced")
            continue
        # bound tolerance scaled loosely: absolute 1e-6 slack on top of tol
        for node in np.flatnonzero(totals > limit + max(tol, 1e-6)):
            bound.append((int(node), label, float(totals[node]), float(limit)))
        if np.any(totals == 0.0):
            notes.append(f"{label} = 0 at some node")
    return StateReport(not (negative or bound), negative, bound, notes)
