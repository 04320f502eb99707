"""Adams-type predictor-corrector for Atangana-Baleanu-Caputo systems.

The forward solver integrates ``D^alpha X(t) = f(t, X, U)`` (left ABC
derivative) on a uniform grid. Written in integral form the problem is

    X(t) = X(0) + (1 - alpha)/B(alpha) * f(t) + alpha/B(alpha) * I^alpha f(t)

where ``I^alpha`` is the Riemann-Liouville integral. The RL part is discretised
with the fractional Adams-Bashforth-Moulton weights (b-weights for the
predictor, a-weights for the corrector).

Costate equations posed with the right ABC derivative are integrated by
reflecting time, ``s = t_f - t``, which turns them into a left-derivative
problem that the forward machinery handles directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .special_functions import gamma, ml_one

__all__ = [
    "Grid",
    "KernelNormalization",
    "NonlocalTerm",
    "CorrectorSign",
    "SchemeOptions",
    "Trajectory",
    "DivergenceError",
    "weight_a",
    "weight_b",
    "compensated_sum",
    "solve_forward",
    "solve_backward",
    "linear_relaxation_solution",
]


class DivergenceError(FloatingPointError):
    """The integrated state became NaN or infinite."""

    def __init__(self, node: int, t: float):
        super().__init__(f"non-finite state at node {node} (t = {t:g})")
        self.node = node
        self.t = t


@dataclass(frozen=True)
class Grid:
    """Uniform time grid ``t_n = n*h`` for ``n = 0..N`` with ``N*h = t_f``."""

    t_f: float = 36.0
    h: float = 0.1

    def __post_init__(self):
        if not (self.t_f > 0 and self.h > 0):
            raise ValueError("t_f and h must be positive")
        n = round(self.t_f / self.h)
        if n < 2 or abs(n * self.h - self.t_f) > 1e-9 * self.t_f:
            raise ValueError(
                f"t_f = {self.t_f} is not an integer multiple (>= 2) of h = {self.h}"
            )

    @property
    def N(self) -> int:
        return round(self.t_f / self.h)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h


class KernelNormalization(str, enum.Enum):
    """Choice of the normalisation function B(alpha), B(0) = B(1) = 1."""

    UNIT = "unit"
    AB_ORIGINAL = "ab_original"

    def value_at(self, alpha: float) -> float:
        if self is KernelNormalization.UNIT or alpha in (0.0, 1.0):
            return 1.0
        return 1.0 - alpha + alpha / gamma(alpha)


class NonlocalTerm(str, enum.Enum):
    AB_INTEGRAL = "ab_integral"
    PAPER_LITERAL = "paper_literal"


class CorrectorSign(str, enum.Enum):
    STANDARD_PLUS = "standard_plus"
    PAPER_MINUS = "paper_minus"


@dataclass(frozen=True)
class SchemeOptions:
    """Switches between the operator-consistent scheme and a literal variant.

    ``paper_literal`` drops both the local ``(1 - alpha)/B`` term and the
    ``alpha/B`` factor, i.e. the plain fractional ABM update.
    ``paper_minus`` uses ``-`` for the middle corrector weight term.
    """

    nonlocal_term: NonlocalTerm = NonlocalTerm.AB_INTEGRAL
    corrector_sign: CorrectorSign = CorrectorSign.STANDARD_PLUS

    def __post_init__(self):
        object.__setattr__(self, "nonlocal_term", NonlocalTerm(self.nonlocal_term))
        object.__setattr__(self, "corrector_sign", CorrectorSign(self.corrector_sign))


@dataclass(frozen=True)
class Trajectory:
    """Samples of a solution on a grid.

    ``x`` has shape ``(N + 1, dim)``; ``controls`` (if any) ``(N + 1, m)``.
    ``rhs_evals`` and ``history_terms`` count right-hand-side evaluations and
    the number of terms entering each history sum (one entry per step).
    """

    t: np.ndarray
    x: np.ndarray
    controls: Optional[np.ndarray] = None
    rhs_evals: int = 0
    history_terms: tuple = field(default=(), repr=False)

    def __post_init__(self):
        for arr in (self.t, self.x, self.controls):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.t)


def _check_j(j, n):
    if not 0 <= j <= n:
        raise IndexError(f"weight index j = {j} outside 0..{n}")


def weight_a(j: int, n: int, alpha: float, options: SchemeOptions = SchemeOptions()) -> float:
    """Corrector weight ``a_{j,n+1}``."""
    _check_j(j, n)
    if j == 0:
        return n ** (alpha + 1) - (n - alpha) * (n + 1) ** alpha
    m = n - j
    sign = 1.0 if options.corrector_sign is CorrectorSign.STANDARD_PLUS else -1.0
    return (m + 2) ** (alpha + 1) + sign * m ** (alpha + 1) - 2.0 * (m + 1) ** (alpha + 1)


def weight_b(j: int, n: int, alpha: float) -> float:
    """Predictor weight ``b_{j,n+1} = (n+1-j)^alpha - (n-j)^alpha``."""
    _check_j(j, n)
    return (n + 1 - j) ** alpha - (n - j) ** alpha


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def compensated_sum(values: np.ndarray) -> np.ndarray:
    """Sum along axis 0 with error-free pairwise transformations.

    Each level of the pairwise cascade keeps the exact rounding error of every
    addition; the collected errors are added back at the end. The result is
    as accurate as summing in twice the working precision.
    """
    x = np.asarray(values, dtype=float)
    if x.shape[0] == 0:
        return np.zeros(x.shape[1:])
    err = np.zeros(x.shape[1:])
    while x.shape[0] > 1:
        if x.shape[0] % 2:
            x = np.concatenate([x, np.zeros((1,) + x.shape[1:])])
        x, e = _two_sum(x[0::2], x[1::2])
        err = err + e.sum(axis=0)
    return x[0] + err


class _Weights:
    """Tabulated a- and b-weights for one alpha and grid length."""

    def __init__(self, alpha, n_max, options):
        k = np.arange(n_max + 2, dtype=float)
        pa = k**alpha
        pa1 = k ** (alpha + 1)
        self.alpha = alpha
        # b over m = n - j: (m+1)^a - m^a
        self.b_m = pa[1:] - pa[:-1]
        sign = 1.0 if options.corrector_sign is CorrectorSign.STANDARD_PLUS else -1.0
        # a over m = n - j for j >= 1
        self.c_m = pa1[2:] + sign * pa1[:-2] - 2.0 * pa1[1:-1]
        self._pa = pa
        self._pa1 = pa1

    def b(self, n):
        return self.b_m[n::-1]

    def a(self, n):
        w = np.empty(n + 1)
        w[0] = self._pa1[n] - (n - self.alpha) * self._pa[n + 1]
        if n:
            w[1:] = self.c_m[n - 1 :: -1]
        return w


NEWTON_MAX_ITERS = 30
NEWTON_TOL = 1e-13


def _fd_jacobian(rhs, t, y, u, fy):
    n = y.size
    J = np.empty((n, n))
    for k in range(n):
        step = 1.5e-8 * max(1.0, abs(y[k]))
        yk = y.copy()
        yk[k] += step
        J[:, k] = (np.atleast_1d(rhs(t, yk, u)) - fy) / step
    return J


def _local_solve(rhs, jac, t, u, base, c, y0, node):
    """Solve ``y = base + c * rhs(t, y, u)`` by damped Newton.

    Returns ``(y, f(y), evaluations)``. The residual is reduced monotonically;
    a step that leaves the domain of ``rhs`` is halved.
    """
    y = y0.copy()
    fy = np.atleast_1d(rhs(t, y, u))
    evals = 1
    r = y - base - c * fy
    eye = np.eye(y.size)
    for _ in range(NEWTON_MAX_ITERS):
        rn = np.max(np.abs(r))
        if rn <= NEWTON_TOL * max(1.0, np.max(np.abs(y))):
            return y, fy, evals
        if jac is not None:
            J = np.atleast_2d(jac(t, y, u))
        else:
            J = _fd_jacobian(rhs, t, y, u, fy)
            evals += y.size
        dy = np.linalg.solve(eye - c * J, -r)
        lam = 1.0
        for _ in range(40):
            y_try = y + lam * dy
            try:
                f_try = np.atleast_1d(rhs(t, y_try, u))
            except ZeroDivisionError:
                f_try = None
            evals += 1
            if f_try is not None and np.all(np.isfinite(f_try)):
                r_try = y_try - base - c * f_try
                if np.max(np.abs(r_try)) < rn or lam < 1e-3:
                    break
            lam *= 0.5
        else:
            raise DivergenceError(node, float(t))
        if f_try is None:
            raise DivergenceError(node, float(t))
        y, fy, r = y_try, f_try, r_try
    if np.max(np.abs(r)) <= 1e3 * NEWTON_TOL * max(1.0, np.max(np.abs(y))):
        return y, fy, evals
    raise DivergenceError(node, float(t))


def solve_forward(
    rhs: Callable,
    x0,
    grid: Grid,
    alpha: float,
    controls: Optional[np.ndarray] = None,
    norm: KernelNormalization = KernelNormalization.UNIT,
    options: SchemeOptions = SchemeOptions(),
    jac: Optional[Callable] = None,
) -> Trajectory:
    """Integrate ``D^alpha X = rhs(t, X, U)`` forward on ``grid``.

    Each step predicts ``X^p`` from the b-weighted history, treating the
    local ``(1 - alpha)/B * f`` term of the AB integral implicitly (Newton),
    then corrects explicitly from ``f(X^p)`` with the a-weights. At
    ``alpha = 1`` (or under ``paper_literal``) the local coefficient is zero
    and the predictor is the explicit fractional Adams-Bashforth step.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x, u) -> array``; ``u`` is the row of ``controls`` at the
        current node, or ``None`` when no controls are given.
    x0 : array_like
        Initial state (scalar or 1-D).
    alpha : float
        Fractional order in (0, 1].
    controls : ndarray, optional
        Grid-aligned control samples, shape ``(N + 1, m)``.
    jac : callable, optional
        ``jac(t, x, u) -> (dim, dim)`` Jacobian of ``rhs`` for the implicit
        predictor. Defaults to ``rhs.jacobian`` if present, else forward
        differences.

    Returns
    -------
    Trajectory
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    N = grid.N
    h = grid.h
    t = grid.times
    if controls is not None:
        controls = np.array(controls, dtype=float)
        if controls.shape[0] != N + 1:
            raise ValueError(
                f"controls have {controls.shape[0]} rows, grid has {N + 1} nodes"
            )
    if jac is None:
        jac = getattr(rhs, "jacobian", None)
    options = SchemeOptions(options.nonlocal_term, options.corrector_sign)
    if options.nonlocal_term is NonlocalTerm.AB_INTEGRAL:
        B = norm.value_at(alpha)
        c_loc = (1.0 - alpha) / B
        c_mem = alpha / B
    else:
        c_loc = 0.0
        c_mem = 1.0
    c_pred = c_mem * h**alpha / gamma(alpha + 1.0)
    c_corr = c_mem * h**alpha / gamma(alpha + 2.0)
    w = _Weights(alpha, N, options)

    def u_at(n):
        return None if controls is None else controls[n]

    X = np.empty((N + 1, x0.size))
    F = np.empty((N + 1, x0.size))
    X[0] = x0
    F[0] = rhs(t[0], X[0], u_at(0))
    evals = 1
    terms = []
    for n in range(N):
        hist = F[: n + 1]
        base = x0 + c_pred * compensated_sum(w.b(n)[:, None] * hist)
        if c_loc:
            xp, fp, k = _local_solve(rhs, jac, t[n + 1], u_at(n + 1), base, c_loc, X[n], n + 1)
            evals += k
        else:
            xp = base
            if not np.all(np.isfinite(xp)):
                raise DivergenceError(n + 1, float(t[n + 1]))
            fp = rhs(t[n + 1], xp, u_at(n + 1))
            evals += 1
        memory = compensated_sum(w.a(n)[:, None] * hist)
        X[n + 1] = x0 + c_loc * fp + c_corr * (fp + memory)
        terms.append(n + 1)
        if not np.all(np.isfinite(X[n + 1])):
            raise DivergenceError(n + 1, float(t[n + 1]))
        F[n + 1] = rhs(t[n + 1], X[n + 1], u_at(n + 1))
        evals += 1
    return Trajectory(t, X, controls, evals, tuple(terms))


def solve_backward(
    costate_rhs: Callable,
    terminal,
    grid: Grid,
    alpha: float,
    stored: Optional[Trajectory] = None,
    controls: Optional[np.ndarray] = None,
    norm: KernelNormalization = KernelNormalization.UNIT,
    options: SchemeOptions = SchemeOptions(),
    jac: Optional[Callable] = None,
) -> Trajectory:
    """Integrate a right-ABC costate system backward from ``t_f``.

    ``costate_rhs(t, lam, x, u)`` gives the right-derivative value. With
    ``s = t_f - t`` the reflected costate ``lam(t_f - s)`` obeys a left-ABC
    equation with the same right-hand side, evaluated at mirrored state and
    control nodes ``t_{N-j}``. The returned trajectory is indexed forward in
    physical time, so ``x[-1]`` equals ``terminal``. ``jac(t, lam, x, u)``
    (default ``costate_rhs.jacobian``) is the derivative in ``lam``.
    """
    N = grid.N
    t = grid.times
    xs = None if stored is None else np.asarray(stored.x)
    us = None if controls is None else np.array(controls, dtype=float)
    if xs is not None and xs.shape[0] != N + 1:
        raise ValueError("stored trajectory does not cover the grid")
    if us is not None and us.shape[0] != N + 1:
        raise ValueError("controls do not cover the grid")

    parts = [a[::-1] for a in (xs, us) if a is not None]
    aux = np.hstack(parts) if parts else None
    nx = 0 if xs is None else xs.shape[1]
    t_f = float(t[-1])

    def split(row):
        if row is None:
            return None, None
        x = row[:nx] if xs is not None else None
        u = row[nx:] if us is not None else None
        return x, u

    def mirrored(s, lam, row):
        return costate_rhs(t_f - s, lam, *split(row))

    if jac is None:
        jac = getattr(costate_rhs, "jacobian", None)

    def mirrored_jac(s, lam, row):
        return jac(t_f - s, lam, *split(row))

    ref = solve_forward(
        mirrored, terminal, grid, alpha, aux, norm, options, mirrored_jac if jac else None
    )
    return Trajectory(
        t,
        np.ascontiguousarray(ref.x[::-1]),
        us,
        ref.rhs_evals,
        ref.history_terms,
    )


def linear_relaxation_solution(t, alpha: float, rate: float = 1.0, x0: float = 1.0, B: float = 1.0):
    """Closed-form solution of ``D^alpha x = -rate * x`` (left ABC, 0 < alpha <= 1).

    Inverting the Laplace transform of the ABC derivative gives

        x(t) = x0 * B/(B + (1-alpha)*rate) * E_alpha(-alpha*rate*t^alpha / (B + (1-alpha)*rate))

    for ``t > 0``. Note the jump at ``t = 0`` when ``alpha < 1``.
    """
    d = B + (1.0 - alpha) * rate
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.array([ml_one(alpha, -alpha * rate * ti**alpha / d) for ti in t])
    return x0 * B / d * vals
