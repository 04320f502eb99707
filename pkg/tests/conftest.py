"""Shared oracles and the acceptance-criteria reporter.

The oracles here are written from the model equations directly and do not call
into the package, so they can cross-check it.
"""

import time

import numpy as np
import pytest

# Simulation parameter set (base rates, per month) and initial state.
PAPER_RATES = dict(
    theta_h=0.029, beta_1=0.00025, beta_2=9.0, alpha_1=0.3, alpha_2=2.0,
    phi=2.0, tau=0.52, gamma=1.0 / 21.0, mu_h=0.02, delta_h=0.2,
    theta_r=0.2, beta_3=6.0, mu_r=1.5, alpha_3=0.2, delta_r=0.5,
)
PAPER_X0 = np.array([0.8, 0.1, 0.1, 0.0, 0.0, 0.8, 0.15, 0.05])


def powered(rates, alpha):
    return {k: v**alpha for k, v in rates.items()}


def reference_rhs(x, u, r):
    """Independent transcription of the eight kernels (rates already powered)."""
    S, E, I, Q, R, Sr, Er, Ir = x
    u1, u2, u3 = u
    Nh = S + E + I + Q + R
    Nr = Sr + Er + Ir
    inc = (r["beta_1"] * Ir + r["beta_2"] * I) * S / Nh
    incr = r["beta_3"] * Sr * Ir / Nr
    return np.array([
        r["theta_h"] - inc - r["mu_h"] * S + r["phi"] * Q - u1 * S,
        inc - (r["alpha_1"] + r["alpha_2"] + r["mu_h"]) * E,
        r["alpha_1"] * E - (r["mu_h"] + r["delta_h"] + r["gamma"]) * I - u2 * I - u3 * I,
        r["alpha_2"] * E - (r["phi"] + r["tau"] + r["mu_h"] + r["delta_h"]) * Q + u3 * I,
        r["gamma"] * I + r["tau"] * Q - r["mu_h"] * R + u1 * S + u2 * I,
        r["theta_r"] - incr - r["mu_r"] * Sr,
        incr - (r["mu_r"] + r["alpha_3"]) * Er,
        r["alpha_3"] * Er - (r["mu_r"] + r["delta_r"]) * Ir,
    ])


def rk4(f, x0, t_f, h):
    """Classical fixed-step RK4 for ``x' = f(x)``; returns all nodes."""
    n = int(round(t_f / h))
    out = np.empty((n + 1, np.size(x0)))
    x = np.array(x0, dtype=float)
    out[0] = x
    for i in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = x
    return out


# --------------------------------------------------- shared expensive fixture


@pytest.fixture(scope="session")
def strategy_matrix():
    """All eight strategies at alpha = 0.9, unit weights, default grid."""
    from mpox_abc.cli import STRATEGY_MASKS
    from mpox_abc.model import ModelParams, StateVector
    from mpox_abc.optimal_control import SweepOptions, fbsm_solve

    start = time.perf_counter()
    sols = {
        sid: fbsm_solve(ModelParams(alpha=0.9), StateVector(), options=SweepOptions(strategy_mask=mask))
        for sid, mask in STRATEGY_MASKS.items()
    }
    return sols, time.perf_counter() - start


# ------------------------------------------------------ acceptance reporting

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if rep.outcome == "passed" else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
