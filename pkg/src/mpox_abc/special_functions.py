"""Gamma and Mittag-Leffler functions on the real line.

The Mittag-Leffler functions are evaluated by direct Taylor summation. When the
alternating series for a negative argument cancels badly in double precision,
the one-parameter function (``0 < omega < 1``) switches to its real integral
representation, and other cases re-sum the same series in extended precision
(mpmath) with enough digits to absorb the cancellation. Arguments with
``|z| > 25`` are refused.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import mpmath

__all__ = [
    "MLParams",
    "MLRangeError",
    "MLResult",
    "gamma",
    "ml_one",
    "ml_two",
    "ml_evaluate",
    "ml_series",
    "ML_MAX_ABS_ARG",
]

ML_MAX_ABS_ARG = 25.0
ML_RTOL = 1e-12
ML_MAX_TERMS = 20_000

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Above this ratio of largest term to result the float sum loses too many digits.
_CANCELLATION_LIMIT = 1e3


class MLRangeError(ArithmeticError):
    """Raised when a Mittag-Leffler series cannot be summed to the contract.

    ``partial_sum`` and ``terms`` describe the state of the summation when it
    was abandoned (``None`` if it never started).
    """

    def __init__(self, message, partial_sum=None, terms=0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.terms = terms


class MLParams:
    """Validated argument bundle ``(omega, xi, z)`` for the series."""

    __slots__ = ("omega", "xi", "z")

    def __init__(self, omega: float, z: float, xi: float = 1.0):
        omega = float(omega)
        xi = float(xi)
        z = float(z)
        if not omega > 0.0:
            raise ValueError(f"omega must be > 0, got {omega}")
        if not xi > 0.0:
            raise ValueError(f"xi must be > 0, got {xi}")
        if not math.isfinite(z):
            raise ValueError(f"z must be finite, got {z}")
        self.omega = omega
        self.xi = xi
        self.z = z

    def __repr__(self):
        return f"MLParams(omega={self.omega!r}, xi={self.xi!r}, z={self.z!r})"


def gamma(x: float) -> float:
    """Gamma function via the Lanczos approximation (reflection below 1/2)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma requires a finite argument, got {x}")
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    if x == math.floor(x) and x <= 23.0:
        return float(math.factorial(int(x) - 1))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power so large arguments do not overflow before the e^-t factor
    half = t ** (0.5 * (x + 0.5))
    return _SQRT_2PI * half * (half * math.exp(-t)) * acc


def _term(omega, xi, z, i):
    arg = omega * i + xi
    if z == 0.0:
        return 1.0 / gamma(arg) if i == 0 else 0.0
    lz = i * math.log(abs(z))
    if arg <= 170.0 and lz < 700.0:
        return z**i / gamma(arg)
    # Γ(arg) or |z|**i leaves the double range; go through logs
    log_mag = lz - math.lgamma(arg)
    if log_mag > 709.0:
        return math.inf
    mag = math.exp(log_mag)
    return -mag if (z < 0.0 and i % 2) else mag


def ml_series(omega: float, xi: float, z: float, n_terms: int) -> float:
    """Sum exactly the first ``n_terms`` terms of the series (compensated)."""
    return _safe_fsum([_term(omega, xi, z, i) for i in range(n_terms)])


def _series_float(omega, xi, z):
    terms = []
    largest = 0.0
    quiet = 0
    for i in range(ML_MAX_TERMS):
        term = _term(omega, xi, z, i)
        if not math.isfinite(term):
            raise MLRangeError(f"series term overflow at i={i}", _safe_fsum(terms), i)
        terms.append(term)
        largest = max(largest, abs(term))
        # two consecutive negligible terms: past the peak and converged
        if abs(term) <= 1e-17 * largest:
            quiet += 1
            if quiet == 2:
                total = _safe_fsum(terms)
                if not math.isfinite(total):
                    raise MLRangeError("series sum overflows the double range", total, i + 1)
                return total, largest, i + 1
        else:
            quiet = 0
    raise MLRangeError(
        f"series did not converge within {ML_MAX_TERMS} terms",
        _safe_fsum(terms),
        ML_MAX_TERMS,
    )


def _safe_fsum(terms):
    try:
        return math.fsum(terms)
    except OverflowError:
        return math.inf


def _series_mp(omega, xi, z, digits):
    with mpmath.workdps(digits):
        zm = mpmath.mpf(z)
        om = mpmath.mpf(omega)
        xm = mpmath.mpf(xi)
        total = mpmath.mpf(0)
        zpow = mpmath.mpf(1)
        tol = mpmath.mpf(10) ** (-(digits - 2))
        quiet = 0
        for i in range(ML_MAX_TERMS):
            term = zpow * mpmath.rgamma(om * i + xm)
            total += term
            if i > 0 and abs(term) <= tol * abs(total):
                quiet += 1
                if quiet == 2:
                    return float(total), i + 1
            else:
                quiet = 0
            zpow *= zm
    raise MLRangeError(
        f"extended-precision series did not converge within {ML_MAX_TERMS} terms",
        float(total),
        ML_MAX_TERMS,
    )


class MLResult(NamedTuple):
    value: float
    n_terms: int
    extended: bool
    method: str = "series"


def _negative_axis_integral(omega, x):
    """``E_omega(-x)`` for ``0 < omega < 1``, ``x > 0`` from the real integral

        E_omega(-x) = sin(omega pi)/(omega pi) * int_0^inf x exp(-w**(1/omega))
                      / (w**2 + 2 x w cos(omega pi) + x**2) dw,

    the spectral (complete monotonicity) representation after substituting
    away the endpoint singularity. The integrand is smooth and positive.
    """
    with mpmath.workdps(30):
        om = mpmath.mpf(omega)
        xm = mpmath.mpf(x)
        c = mpmath.cos(om * mpmath.pi)
        inv = 1 / om

        def f(w):
            return mpmath.exp(-(w**inv)) * xm / (w * w + 2 * w * xm * c + xm * xm)

        pts = sorted({mpmath.mpf(0), xm, mpmath.mpf(1)}) + [mpmath.inf]
        val, err = mpmath.quad(f, pts, error=True, maxdegree=10)
        val = val * mpmath.sin(om * mpmath.pi) / (om * mpmath.pi)
        if not err <= 1e-14 * abs(val):
            raise MLRangeError(
                f"integral representation did not reach tolerance (err {float(err):.1e})",
                float(val),
                0,
            )
        return float(val)


def _log10_peak(omega, xi, z):
    """log10 of the largest term magnitude, computed without overflow.

    Raises MLRangeError when the terms are still above 1e-40 after the term
    budget, so infeasible extended-precision sums are refused up front.
    """
    lz = math.log(abs(z))
    floor = -40.0 * math.log(10.0)
    peak = -math.inf
    for i in range(ML_MAX_TERMS):
        lm = i * lz - math.lgamma(omega * i + xi)
        peak = max(peak, lm)
        if lm < peak and lm < floor:
            return peak / math.log(10.0)
    raise MLRangeError(
        f"series needs more than {ML_MAX_TERMS} terms "
        f"(omega={omega}, xi={xi}, z={z})",
        None,
        ML_MAX_TERMS,
    )


def ml_evaluate(omega: float, xi: float, z: float) -> MLResult:
    """Evaluate the two-parameter series and report how it was summed."""
    params = MLParams(omega, z, xi)
    omega, xi, z = params.omega, params.xi, params.z
    if abs(z) > ML_MAX_ABS_ARG:
        raise MLRangeError(
            f"|z| = {abs(z)} exceeds the supported range {ML_MAX_ABS_ARG}"
        )
    if z == 0.0:
        return MLResult(1.0 / gamma(xi), 1, False)
    if z > 0.0:
        total, _, n = _series_float(omega, xi, z)
        return MLResult(total, n, False)
    try:
        total, largest, n = _series_float(omega, xi, z)
    except MLRangeError:
        total = None
    if total is not None and total > 0.0 and largest / total <= _CANCELLATION_LIMIT:
        return MLResult(total, n, False)
    if xi == 1.0 and omega < 1.0:
        return MLResult(_negative_axis_integral(omega, -z), 0, True, "integral")
    # alternating series with heavy cancellation: same sum, more digits
    log_peak = max(_log10_peak(omega, xi, z), 0.0)
    digits = 30 + int(math.ceil(log_peak))
    value, n = _series_mp(omega, xi, z, digits)
    if value != 0.0:
        need = 25 + int(math.ceil(log_peak - math.log10(abs(value))))
        if need > digits:
            value, n = _series_mp(omega, xi, z, need)
    return MLResult(value, n, True, "series")


def ml_one(omega: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``sum z**i / Γ(omega*i + 1)``.

    Raises
    ------
    MLRangeError
        If ``|z| > 25`` or the series cannot be summed within the term budget.
    """
    return ml_evaluate(omega, 1.0, z).value


def ml_two(omega: float, xi: float, z: float) -> float:
    """Two-parameter Mittag-Leffler function ``sum z**i / Γ(omega*i + xi)``."""
    return ml_evaluate(omega, xi, z).value
