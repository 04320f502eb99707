import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpox_abc.frac_solver import (
    CorrectorSign,
    DivergenceError,
    Grid,
    KernelNormalization,
    NonlocalTerm,
    SchemeOptions,
    compensated_sum,
    linear_relaxation_solution,
    solve_backward,
    solve_forward,
    weight_a,
    weight_b,
)
from mpox_abc.special_functions import gamma

from conftest import rk4


def decay(t, x, u):
    return -x


# ---------------------------------------------------------------- grid / B


def test_grid_nodes():
    g = Grid(36.0, 0.1)
    assert g.N == 360
    assert g.times[-1] == pytest.approx(36.0)
    assert len(g.times) == 361


@pytest.mark.parametrize("t_f,h", [(1.0, 0.3), (0.1, 0.1), (-1.0, 0.1), (1.0, 0.0)])
def test_grid_rejects_bad_input(t_f, h):
    with pytest.raises(ValueError):
        Grid(t_f, h)


@pytest.mark.parametrize("variant", list(KernelNormalization))
def test_normalization_endpoints(variant):
    assert variant.value_at(0.0) == 1.0
    assert variant.value_at(1.0) == 1.0


def test_ab_original_normalization_value():
    a = 0.6
    assert KernelNormalization.AB_ORIGINAL.value_at(a) == pytest.approx(1 - a + a / math.gamma(a), rel=1e-13)
    assert KernelNormalization.UNIT.value_at(a) == 1.0


def test_scheme_defaults():
    o = SchemeOptions()
    assert o.nonlocal_term is NonlocalTerm.AB_INTEGRAL
    assert o.corrector_sign is CorrectorSign.STANDARD_PLUS
    assert SchemeOptions("paper_literal", "paper_minus").corrector_sign is CorrectorSign.PAPER_MINUS


# ----------------------------------------------------------------- weights


@pytest.mark.parametrize("n", [1, 2, 5, 40])
def test_weight_a_alpha_one(n):
    assert weight_a(0, n, 1.0) == pytest.approx(1.0)
    for j in range(1, n + 1):
        assert weight_a(j, n, 1.0) == pytest.approx(2.0)


def test_weight_a_matches_high_precision_closed_form():
    a, j, n = 0.9, 3, 7
    with mpmath.workdps(50):
        A = mpmath.mpf(a)
        m = n - j
        ref = (m + 2) ** (A + 1) + m ** (A + 1) - 2 * (m + 1) ** (A + 1)
        ref0 = mpmath.mpf(n) ** (A + 1) - (n - A) * mpmath.mpf(n + 1) ** A
    assert weight_a(j, n, a) == pytest.approx(float(ref), rel=1e-12)
    assert weight_a(0, n, a) == pytest.approx(float(ref0), rel=1e-12)


def test_weight_a_paper_minus_sign():
    opts = SchemeOptions(corrector_sign="paper_minus")
    m = 2
    assert weight_a(5 - m, 5, 1.0, opts) == pytest.approx(2.0 - 2.0 * m * m)


def test_weight_b_examples():
    for n in range(6):
        for j in range(n + 1):
            assert weight_b(j, n, 1.0) == pytest.approx(1.0)
        assert weight_b(n, n, 0.37) == 1.0


@pytest.mark.parametrize("fn", [weight_a, weight_b])
def test_weight_index_errors(fn):
    with pytest.raises(IndexError):
        fn(4, 3, 0.5)
    with pytest.raises(IndexError):
        fn(-1, 3, 0.5)


@settings(max_examples=80, deadline=None)
@given(st.floats(min_value=0.01, max_value=1.0), st.integers(min_value=0, max_value=400))
def test_weight_b_telescopes(alpha, n):
    total = math.fsum(weight_b(j, n, alpha) for j in range(n + 1))
    assert abs(total - (n + 1) ** alpha) <= 1e-12 * (n + 1) ** alpha


@settings(max_examples=80, deadline=None)
@given(st.floats(min_value=0.01, max_value=1.0), st.integers(min_value=1, max_value=300))
def test_standard_plus_weights_positive(alpha, n):
    assert all(weight_a(j, n, alpha) > 0 for j in range(n + 1))


def test_compensated_sum_exactness():
    vals = np.array([1e16, 1.0, -1e16, 1.0, 1e-3])
    assert compensated_sum(vals) == pytest.approx(2.001, abs=1e-15)
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1001, 3)) * 10.0 ** rng.integers(-8, 8, size=(1001, 1))
    ref = [math.fsum(x[:, k]) for k in range(3)]
    assert np.allclose(compensated_sum(x), ref, rtol=1e-15, atol=0)


# ------------------------------------------------------------- forward solve


def test_zero_field_keeps_initial_state():
    x0 = np.array([0.3, -2.0, 5.0])
    tr = solve_forward(lambda t, x, u: np.zeros(3), x0, Grid(2.0, 0.01), 0.6)
    assert np.all(tr.x == x0)


def test_alpha_one_matches_exponential():
    tr = solve_forward(decay, 1.0, Grid(5.0, 1e-3), 1.0)
    assert np.max(np.abs(tr.x[:, 0] - np.exp(-tr.t))) <= 1e-4


def test_alpha_one_against_rk4_converges_first_order_or_better():
    # smooth nonlinear test field
    def f(x):
        return np.array([-x[0] * x[1], x[0] - 0.5 * x[1] ** 2])

    x0 = np.array([1.0, 0.5])
    errs = []
    for h in (0.02, 0.01):
        tr = solve_forward(lambda t, x, u: f(x), x0, Grid(2.0, h), 1.0)
        ref = rk4(f, x0, 2.0, h / 10.0)[::10]
        errs.append(np.max(np.abs(tr.x - ref)))
    assert errs[1] <= 0.55 * errs[0]


@pytest.mark.parametrize("alpha,tol", [(0.5, 2e-2), (0.7, 2e-2), (0.9, 2e-2)])
def test_linear_relaxation_oracle(alpha, tol):
    tr = solve_forward(decay, 1.0, Grid(5.0, 1e-3), alpha)
    mask = tr.t >= 0.5
    ref = linear_relaxation_solution(tr.t[mask][::50], alpha)
    assert np.max(np.abs(tr.x[mask, 0][::50] - ref)) <= tol


def test_linear_relaxation_closed_form_is_independent_of_solver():
    # check the closed form itself through the Laplace identity at alpha = 1/2:
    # E_{1/2}(-z) = exp(z^2) erfc(z)
    a = 0.5
    t = 2.0
    d = 1.0 + (1 - a)
    z = a * t**a / d
    ref = float(mpmath.exp(mpmath.mpf(z) ** 2) * mpmath.erfc(z)) / d
    assert linear_relaxation_solution(t, a)[0] == pytest.approx(ref, rel=1e-12)


def test_paper_literal_scheme_differs_from_ab_integral():
    g = Grid(2.0, 0.01)
    ab = solve_forward(decay, 1.0, g, 0.5)
    lit = solve_forward(decay, 1.0, g, 0.5, options=SchemeOptions("paper_literal"))
    assert np.max(np.abs(ab.x - lit.x)) > 1e-2
    # the literal scheme is the plain fractional Adams method: at alpha = 1 they agree
    ab1 = solve_forward(decay, 1.0, g, 1.0)
    lit1 = solve_forward(decay, 1.0, g, 1.0, options=SchemeOptions("paper_literal"))
    assert np.array_equal(ab1.x, lit1.x)


def test_ab_original_normalization_changes_solution():
    g = Grid(1.0, 0.01)
    u = solve_forward(decay, 1.0, g, 0.6)
    o = solve_forward(decay, 1.0, g, 0.6, norm=KernelNormalization.AB_ORIGINAL)
    B = 1 - 0.6 + 0.6 / gamma(0.6)
    ref = linear_relaxation_solution(o.t[-1], 0.6, B=B)[0]
    assert o.x[-1, 0] == pytest.approx(ref, abs=2e-3)
    assert abs(u.x[-1, 0] - o.x[-1, 0]) > 1e-3


def test_history_terms_and_evaluation_count():
    calls = {"n": 0}

    def counted(t, x, u):
        calls["n"] += 1
        return -x

    g = Grid(1.0, 0.1)
    tr = solve_forward(counted, 1.0, g, 0.8)
    assert tr.history_terms == tuple(range(1, g.N + 1))
    assert tr.rhs_evals == calls["n"]


def test_determinism_bitwise():
    g = Grid(3.0, 0.01)
    f = lambda t, x, u: np.array([-x[0] + 0.1 * x[1], -x[1] ** 2])  # noqa: E731
    a = solve_forward(f, [1.0, 2.0], g, 0.75)
    b = solve_forward(f, [1.0, 2.0], g, 0.75)
    assert a.x.tobytes() == b.x.tobytes()


def test_trajectory_arrays_read_only_and_controls_copied():
    g = Grid(1.0, 0.1)
    u = np.zeros((g.N + 1, 1))
    tr = solve_forward(lambda t, x, c: -x + c, 1.0, g, 0.9, controls=u)
    with pytest.raises(ValueError):
        tr.x[0, 0] = 5.0
    u[0, 0] = 1.0  # caller's array stays writable and independent
    assert tr.controls[0, 0] == 0.0


def test_controls_used_at_node():
    g = Grid(1.0, 0.5)
    seen = []

    def f(t, x, u):
        seen.append((round(t, 12), float(u[0])))
        return np.zeros(1)

    solve_forward(f, 0.0, g, 1.0, controls=np.array([[0.0], [1.0], [2.0]]))
    assert all(val == t * 2 for t, val in seen)


def test_divergence_reports_node():
    with np.errstate(all="ignore"), pytest.raises(DivergenceError) as info:
        solve_forward(lambda t, x, u: x**3, 1.0, Grid(5.0, 0.5), 1.0)
    assert info.value.node >= 1


def test_controls_length_checked():
    with pytest.raises(ValueError):
        solve_forward(decay, 1.0, Grid(1.0, 0.1), 0.9, controls=np.zeros((5, 1)))


# ------------------------------------------------------------ backward solve


def test_backward_zero_source():
    g = Grid(2.0, 0.1)
    tr = solve_backward(lambda t, lam, x, u: np.zeros(2), np.zeros(2), g, 0.8)
    assert np.all(tr.x == 0.0)


def test_backward_alpha_one_exponential():
    g = Grid(3.0, 1e-3)
    tr = solve_backward(lambda t, lam, x, u: -lam, np.array([1.0]), g, 1.0)
    assert tr.x[-1, 0] == 1.0
    assert np.max(np.abs(tr.x[:, 0] - np.exp(-(3.0 - tr.t)))) <= 1e-4


def test_backward_equals_mirrored_forward_bitwise():
    g = Grid(2.0, 0.05)
    rng = np.random.default_rng(11)
    stored_x = rng.uniform(0.5, 1.5, size=(g.N + 1, 2))
    U = rng.uniform(0, 1, size=(g.N + 1, 1))
    stored = solve_forward(lambda t, x, u: np.zeros(2), [0.0, 0.0], g, 0.7)
    stored = type(stored)(stored.t, stored_x)

    def costate(t, lam, x, u):
        return np.array([-x[0] * lam[0] + u[0], x[1] * lam[1] - lam[0]])

    back = solve_backward(costate, [0.2, -0.1], g, 0.7, stored, U)
    t_f = g.t_f
    aux = np.hstack([stored_x[::-1], U[::-1]])

    def mirrored(s, lam, row):
        return costate(t_f - s, lam, row[:2], row[2:])

    fwd = solve_forward(mirrored, [0.2, -0.1], g, 0.7, aux)
    assert np.array_equal(back.x, fwd.x[::-1])


def test_backward_reads_mirrored_state_nodes():
    g = Grid(1.0, 0.25)
    stored = solve_forward(lambda t, x, u: np.ones(1), [0.0], g, 1.0)
    seen = []

    def costate(t, lam, x, u):
        seen.append((round(t, 12), round(float(x[0]), 12)))
        return np.zeros(1)

    solve_backward(costate, [0.0], g, 1.0, stored)
    for t, x in seen:
        assert x == pytest.approx(t)  # stored x(t) = t at the node being evaluated
