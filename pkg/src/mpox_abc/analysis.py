"""Equilibria, reproduction numbers, linear stability and the contraction check.

All formulas use the effective (alpha-powered) rates. Controls entering the
equilibrium and Jacobian formulas are time-frozen constants.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .eigen import eigenpairs, eigenvalues
from .frac_solver import KernelNormalization
from .model import (
    COMPARTMENTS,
    ControlVector,
    ModelParams,
    StateVector,
    effective_params,
    population_bounds,
    rhs_controlled,
    _as_control,
    model_jacobian,
)
from .special_functions import gamma

__all__ = [
    "CompositeRates",
    "EquilibriumReport",
    "StabilityVerdict",
    "ContractionCertificate",
    "EquilibriumConvergenceError",
    "composite_rates",
    "disease_free_equilibrium",
    "endemic_equilibrium",
    "basic_reproduction_number",
    "rodent_reproduction_number",
    "next_generation_radius",
    "jacobian_at",
    "dfe_quadratic_coefficients",
    "dfe_eigenvalues_analytic",
    "stability_check",
    "stability_at",
    "contraction_certificate",
    "analysis_report",
    "write_report",
    "read_report",
]

FP_DAMPING = 0.5
FP_MAX_ITERS = 10_000
FP_TOL = 1e-12
ACCEPT_RESIDUAL = 1e-9


class EquilibriumConvergenceError(ArithmeticError):
    """Damped fixed-point iteration hit its cap."""


@dataclass(frozen=True)
class CompositeRates:
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float


def composite_rates(p: ModelParams, U=None) -> CompositeRates:
    """``k1..k5``; only ``k2`` carries the controls (``u2 + u3``)."""
    q = effective_params(p)
    _, u2, u3 = _as_control(U)
    return CompositeRates(
        k1=q.alpha_1 + q.alpha_2 + q.mu_h,
        k2=q.mu_h + q.delta_h + q.gamma + u2 + u3,
        k3=q.phi + q.tau + q.mu_h + q.delta_h,
        k4=q.mu_r + q.alpha_3,
        k5=q.mu_r + q.delta_r,
    )


@dataclass
class EquilibriumReport:
    """Steady state plus the quantities it was built from.

    ``state`` is ``None`` when ``exists`` is false (no positive endemic state).
    """

    kind: str
    exists: bool
    state: Optional[StateVector]
    residual: float
    k: CompositeRates
    phi_h: float
    phi_r: float
    iterations: int = 0
    notes: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.exists and self.residual <= ACCEPT_RESIDUAL


def _residual(x, U, p):
    return float(np.max(np.abs(rhs_controlled(0.0, x, U, p))))


def disease_free_equilibrium(p: ModelParams) -> EquilibriumReport:
    q = effective_params(p)
    b_h, b_r = population_bounds(q)
    x = StateVector(b_h, 0.0, 0.0, 0.0, 0.0, b_r, 0.0, 0.0)
    return EquilibriumReport(
        "disease_free", True, x, _residual(x.to_array(), None, q),
        composite_rates(q), 0.0, 0.0,
    )


def _damped_fixed_point(g, start, what):
    phi = start
    for it in range(1, FP_MAX_ITERS + 1):
        new = (1.0 - FP_DAMPING) * phi + FP_DAMPING * g(phi)
        if abs(new - phi) <= FP_TOL * max(1.0, abs(new)):
            return new, it
        phi = new
    raise EquilibriumConvergenceError(
        f"{what} fixed point not converged after {FP_MAX_ITERS} iterations (last {phi!r})"
    )


def rodent_reproduction_number(p: ModelParams) -> float:
    """Threshold of the rodent sub-system, ``alpha_3 beta_3 / (k4 k5)``."""
    q = effective_params(p)
    k = composite_rates(q)
    return q.alpha_3 * q.beta_3 / (k.k4 * k.k5)


def _rodent_branch(q, k, phi_r):
    s = q.theta_r / (q.mu_r + phi_r)
    e = phi_r * s / k.k4
    i = q.alpha_3 * e / k.k5
    return s, e, i


def _human_branch(q, k, u, phi_h):
    u1, u2, u3 = u
    # Q depends on S through E and I; solve the S balance in closed form
    q_per_s = (q.alpha_2 + u3 * q.alpha_1 / k.k2) * phi_h / (k.k1 * k.k3)
    s = q.theta_h / (phi_h + q.mu_h + u1 - q.phi * q_per_s)
    e = phi_h * s / k.k1
    i = q.alpha_1 * e / k.k2
    qq = (q.alpha_2 * e + u3 * i) / k.k3
    r = (q.gamma * i + q.tau * qq + u1 * s + u2 * i) / q.mu_h
    return s, e, i, qq, r


def endemic_equilibrium(p: ModelParams, U=None) -> EquilibriumReport:
    """Endemic steady state for time-frozen controls ``U``.

    The rodent force of infection is found first (it does not depend on the
    humans); the human one is then a scalar fixed point with the rodent
    reservoir as a constant source.
    """
    q = effective_params(p)
    u = _as_control(U)
    k = composite_rates(q, u)
    notes = []

    def g_r(phi):
        s, e, i = _rodent_branch(q, k, phi)
        return q.beta_3 * i / (s + e + i)

    # zero is always a rodent root; a positive one exists iff the threshold exceeds 1
    if rodent_reproduction_number(q) > 1.0:
        phi_r, it_r = _damped_fixed_point(g_r, q.beta_3, "rodent")
    else:
        phi_r, it_r = 0.0, 0
        notes.append("rodent force of infection is zero (below invasion threshold)")
    s_r, e_r, i_r = _rodent_branch(q, k, phi_r)

    def g_h(phi):
        s, e, i, qq, r = _human_branch(q, k, u, phi)
        return (q.beta_1 * i_r + q.beta_2 * i) / (s + e + i + qq + r)

    r0 = basic_reproduction_number(q, u[1], u[2])
    if i_r == 0.0 and r0 <= 1.0:
        notes.append("no positive human fixed point: R0 <= 1 and no rodent source")
        return EquilibriumReport(
            "endemic", False, None, math.nan, k, 0.0, phi_r, it_r, notes
        )
    phi_h, it_h = _damped_fixed_point(g_h, max(q.beta_2, q.beta_1), "human")
    x = StateVector(*_human_branch(q, k, u, phi_h), s_r, e_r, i_r)
    res = _residual(x.to_array(), u, q)
    return EquilibriumReport("endemic", True, x, res, k, phi_h, phi_r, it_r + it_h, notes)


def basic_reproduction_number(p: ModelParams, u2: float = 0.0, u3: float = 0.0) -> float:
    """``alpha_1 beta_2 / (k1 k2)`` with ``k2`` including ``u2 + u3``."""
    q = effective_params(p)
    k = composite_rates(q, (0.0, u2, u3))
    return float(q.alpha_1 * q.beta_2 / (k.k1 * k.k2))


def next_generation_radius(p: ModelParams, U=None) -> float:
    """Spectral radius of ``F V^-1`` at the disease-free state.

    Infected compartments are ``(E_h, I_h, E_r, I_r)``; this includes the
    rodent cycle that the human-only scalar leaves out.
    """
    q = effective_params(p)
    k = composite_rates(q, U)
    F = np.zeros((4, 4))
    F[0, 1] = q.beta_2
    F[0, 3] = q.beta_1
    F[2, 3] = q.beta_3
    V = np.array([
        [k.k1, 0.0, 0.0, 0.0],
        [-q.alpha_1, k.k2, 0.0, 0.0],
        [0.0, 0.0, k.k4, 0.0],
        [0.0, 0.0, -q.alpha_3, k.k5],
    ])
    K = F @ np.linalg.inv(V)
    return max(abs(z) for z in eigenvalues(K))


def jacobian_at(p: ModelParams, U, X) -> np.ndarray:
    """Analytic Jacobian of the kernel vector with respect to the state."""
    return model_jacobian(X, U, p)


def dfe_quadratic_coefficients(p: ModelParams, U=None) -> dict:
    """Characteristic-polynomial pieces at the disease-free state.

    ``A_paper``/``B_paper`` are the coefficients of the combined single
    quadratic ``x^2 + A x + B``, with ``B = (1 - R0) k1 k2 - alpha_3 beta_3``.
    The exact factorisation has one quadratic per species block:
    ``x^2 + (k1+k2) x + k1 k2 (1 - R0)`` and ``x^2 + (k4+k5) x + k4 k5 - alpha_3 beta_3``.
    """
    q = effective_params(p)
    u = _as_control(U)
    k = composite_rates(q, u)
    r0 = basic_reproduction_number(q, u[1], u[2])
    ab3 = q.alpha_3 * q.beta_3
    return {
        "A_paper": k.k1 + k.k2,
        "B_paper": (1.0 - r0) * k.k1 * k.k2 - ab3,
        "A_human": k.k1 + k.k2,
        "B_human": k.k1 * k.k2 * (1.0 - r0),
        "A_rodent": k.k4 + k.k5,
        "B_rodent": k.k4 * k.k5 - ab3,
    }


def _quadratic_roots(a, b):
    d = cmath.sqrt(a * a - 4.0 * b)
    return [(-a + d) / 2.0, (-a - d) / 2.0]


def dfe_eigenvalues_analytic(p: ModelParams, U=None, variant: str = "exact") -> list:
    """Closed-form eigenvalue list of the Jacobian at the disease-free state.

    ``variant="exact"`` follows the block factorisation; ``"paper"`` gives the
    single-quadratic list (six linear factors plus the roots of the combined
    quadratic), which coincides with the exact one only when
    ``alpha_3 beta_3 = 0``.
    """
    q = effective_params(p)
    u = _as_control(U)
    k = composite_rates(q, u)
    c = dfe_quadratic_coefficients(q, u)
    common = [-(q.mu_h + u[0]), -k.k3, -q.mu_h, -q.mu_r]
    if variant == "paper":
        vals = common + [-k.k4, -k.k5] + _quadratic_roots(c["A_paper"], c["B_paper"])
    elif variant == "exact":
        vals = (
            common
            + _quadratic_roots(c["A_human"], c["B_human"])
            + _quadratic_roots(c["A_rodent"], c["B_rodent"])
        )
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return sorted((complex(v) for v in vals), key=lambda z: (z.real, z.imag))


@dataclass(frozen=True)
class StabilityVerdict:
    eigenvalues: tuple
    margin: float
    stable: bool
    residuals: tuple = ()


def stability_check(eigs, alpha: float) -> StabilityVerdict:
    """Fractional-order test ``|arg lambda| > alpha pi / 2`` for every eigenvalue."""
    eigs = tuple(complex(z) for z in eigs)
    if not eigs:
        raise ValueError("empty eigenvalue list")
    threshold = alpha * math.pi / 2.0
    margin = min(abs(cmath.phase(z)) - threshold for z in eigs)
    return StabilityVerdict(eigs, margin, margin > 0.0)


def stability_at(p: ModelParams, X, U=None) -> StabilityVerdict:
    """Jacobian eigenvalues at ``X`` run through :func:`stability_check`."""
    J = jacobian_at(p, U, X)
    pairs = eigenpairs(J)
    v = stability_check([e.value for e in pairs], p.alpha)
    return StabilityVerdict(v.eigenvalues, v.margin, v.stable, tuple(e.residual for e in pairs))


@dataclass(frozen=True)
class ContractionCertificate:
    lipschitz: tuple
    bounds: tuple
    M0: float
    factors: tuple
    satisfied: bool


def contraction_certificate(
    p: ModelParams,
    U_max=None,
    m=None,
    M0: float = 1.0,
    norm: KernelNormalization = KernelNormalization.UNIT,
    n_h: float = 1.0,
    n_r: float = 1.0,
) -> ContractionCertificate:
    """Lipschitz constants ``L1..L8`` and the factors that must stay below 1.

    ``m`` are sup-bounds of the eight compartments (default: the species
    population bounds). ``n_h``/``n_r`` are the population totals used in the
    incidence denominators of ``L1`` and ``L6``.
    """
    if M0 <= 0:
        raise ValueError("M0 must be positive")
    q = effective_params(p)
    u = _as_control(ControlVector(0.9, 0.9, 0.9) if U_max is None else U_max)
    if m is None:
        b_h, b_r = population_bounds(q)
        m = (b_h,) * 5 + (b_r,) * 3
    m = tuple(float(v) for v in m)
    if len(m) != 8 or min(m) <= 0:
        raise ValueError("need eight positive compartment bounds")
    k = composite_rates(q, u)
    L = (
        (q.beta_1 * m[7] + q.beta_2 * m[2]) / n_h + q.mu_h + u[0],
        k.k1,
        k.k2,
        k.k3,
        q.mu_h,
        q.beta_3 * m[7] / n_r + q.mu_r,
        k.k4,
        k.k5,
    )
    a = q.alpha
    B = norm.value_at(a)
    c = (1.0 - a) / B + M0**a / (B * gamma(a))
    factors = tuple(c * li for li in L)
    return ContractionCertificate(L, m, M0, factors, all(f < 1.0 for f in factors))


def analysis_report(p: ModelParams, U=None) -> dict:
    """Flat key/value summary: R0 values, equilibria, eigenvalues, margins, certificate."""
    q = effective_params(p)
    u = _as_control(U)
    out = {
        "alpha": p.alpha,
        "R0": basic_reproduction_number(q, u[1], u[2]),
        "R0_rodent": rodent_reproduction_number(q),
        "R0_next_generation": next_generation_radius(q, u),
    }
    dfe = disease_free_equilibrium(q)
    for name, v in zip(COMPARTMENTS, dfe.state.to_array()):
        out[f"dfe.{name}"] = float(v)
    out["dfe.residual"] = dfe.residual
    verdict = stability_at(q, dfe.state, u)
    for i, z in enumerate(verdict.eigenvalues):
        out[f"dfe.eig{i}.re"] = z.real
        out[f"dfe.eig{i}.im"] = z.imag
    out["dfe.margin"] = verdict.margin
    out["dfe.stable"] = verdict.stable
    out["dfe.max_residual"] = max(verdict.residuals)

    try:
        end = endemic_equilibrium(q, u)
    except EquilibriumConvergenceError as exc:
        out["endemic.exists"] = False
        out["endemic.error"] = str(exc)
    else:
        out["endemic.exists"] = end.exists
        if end.exists:
            for name, v in zip(COMPARTMENTS, end.state.to_array()):
                out[f"endemic.{name}"] = float(v)
            out["endemic.phi_h"] = end.phi_h
            out["endemic.phi_r"] = end.phi_r
            out["endemic.residual"] = end.residual
            ev = stability_at(q, end.state, u)
            for i, z in enumerate(ev.eigenvalues):
                out[f"endemic.eig{i}.re"] = z.real
                out[f"endemic.eig{i}.im"] = z.imag
            out["endemic.margin"] = ev.margin
            out["endemic.stable"] = ev.stable

    cert = contraction_certificate(q, u)
    for i, (li, fi) in enumerate(zip(cert.lipschitz, cert.factors), start=1):
        out[f"certificate.L{i}"] = li
        out[f"certificate.factor{i}"] = fi
    out["certificate.satisfied"] = cert.satisfied
    return out


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in report.items():
            fh.write(f"{key} = {_fmt(value)}\n")


def read_report(path) -> dict:
    """Inverse of :func:`write_report` (floats, booleans, else strings)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            key, _, raw = line.partition(" = ")
            if raw in ("true", "false"):
                out[key] = raw == "true"
                continue
            try:
                out[key] = int(raw) if raw.lstrip("-").isdigit() else float(raw)
            except ValueError:
                out[key] = raw
    return out
