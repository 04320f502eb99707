"""Dense real eigenvalue solver for small matrices.

Balancing, Householder reduction to upper Hessenberg form and the Francis
implicit double-shift QR iteration (the classic ``hqr`` algorithm). Eigenvector
estimates are obtained afterwards by inverse iteration so that every
eigenvalue comes with a residual certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenConvergenceError",
    "EigenPair",
    "balance",
    "hessenberg",
    "hqr",
    "eigenvalues",
    "eigenpairs",
    "residual",
]

_RADIX = 2.0
MAX_ITER_PER_EIG = 60


class EigenConvergenceError(ArithmeticError):
    """QR iteration failed to deflate within the iteration cap."""


def balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity scaling (powers of two) to even out row/column norms."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    sqrdx = _RADIX * _RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            if r == 0.0 or c == 0.0:
                continue
            g = r / _RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= _RADIX
                c *= sqrdx
            g = r * _RADIX
            while c > g:
                f /= _RADIX
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def hqr(h: np.ndarray, max_iter: int = MAX_ITER_PER_EIG) -> list:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    Deflation uses a relative sub-diagonal test against the neighbouring
    diagonal entries (falling back to ``1e-12 * ||H||``). Exceptional shifts
    are applied after 10 and 20 stagnant iterations.
    """
    a = np.array(h, dtype=float)
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = float(np.sum(np.abs(a)))
    eps = np.finfo(float).eps
    nn = n - 1
    t = 0.0
    its_total = 0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small sub-diagonal element
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= eps * s or abs(a[l, l - 1]) <= 1e-12 * anorm:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its >= max_iter:
                raise EigenConvergenceError(
                    f"QR iteration did not converge after {max_iter} iterations "
                    f"(active block ending at row {nn})"
                )
            if its in (10, 20):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            its_total += 1
            # look for two consecutive small sub-diagonal elements
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= eps * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            # double-shift QR sweep on rows/columns l..nn
            k = m
            while k <= nn - 1:
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            a[k, k - 1] = -a[k, k - 1]
                    else:
                        a[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        if k != nn - 1:
                            p += r * a[k + 2, j]
                            a[k + 2, j] -= p * z
                        a[k + 1, j] -= p * y
                        a[k, j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        if k != nn - 1:
                            p += z * a[i, k + 2]
                            a[i, k + 2] -= p * r
                        a[i, k + 1] -= p * q
                        a[i, k] -= p
                k += 1
    return [complex(wr[i], wi[i]) for i in range(n)]


def eigenvalues(m) -> list:
    """All eigenvalues of a real square matrix, sorted by (real, imag)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.shape[0] == 0:
        return []
    vals = hqr(hessenberg(balance(m)))
    vals = [complex(v.real, 0.0) if v.imag == 0.0 else v for v in vals]
    return sorted(vals, key=lambda z: (z.real, z.imag))


def residual(m, lam: complex, v) -> float:
    """``||(M - lam I) v|| / (||M|| ||v||)`` with Frobenius norms (``||M|| > 0``)."""
    m = np.asarray(m, dtype=complex)
    v = np.asarray(v, dtype=complex)
    scale = np.linalg.norm(m) * np.linalg.norm(v)
    if scale == 0.0:
        return float(np.linalg.norm(m @ v - lam * v))
    return float(np.linalg.norm(m @ v - lam * v) / scale)


def _inverse_iteration(m, lam, iters=3):
    n = m.shape[0]
    scale = max(np.linalg.norm(m), 1.0)
    shift = lam + 1e-10 * scale * (1 + 1j if lam.imag else 1)
    a = m.astype(complex) - shift * np.eye(n)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n) + (1j * rng.standard_normal(n) if lam.imag else 0)
    v = v.astype(complex)
    for _ in range(iters):
        try:
            v = np.linalg.solve(a, v)
        except np.linalg.LinAlgError:
            a = a + 1e-8 * scale * np.eye(n)
            v = np.linalg.solve(a, v)
        v /= np.linalg.norm(v)
    return v


@dataclass(frozen=True)
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float


def eigenpairs(m) -> list:
    """Eigenvalues with inverse-iteration vectors and their relative residuals."""
    m = np.asarray(m, dtype=float)
    return [
        EigenPair(lam, v, residual(m, lam, v))
        for lam in eigenvalues(m)
        for v in (_inverse_iteration(m, lam),)
    ]
