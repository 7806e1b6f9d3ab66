import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bjortho.convex1d import (
    ConvexCurve,
    DerivSchedule,
    check_convex,
    left_derivative,
    limsup_derivative_check,
    minimize_convex,
    minimize_convex_auto,
    one_sided_derivatives,
    quotient_limits,
    right_derivative,
)
from bjortho.errors import ConvergenceError, DomainError, InputError, NonConvexError


def curve(fn, lo=-2.0, hi=2.0):
    return ConvexCurve(fn, lo, hi)


@pytest.mark.parametrize("fn, lo, hi, t, expected", [
    (lambda t: abs(t + 1), -2, 2, 0.0, 1.0),
    (lambda t: 3.5, -2, 2, 0.7, 0.0),
    (lambda t: max(1.0, 1.0 + t), -1, 1, 0.0, 1.0),
])
def test_right_derivative(fn, lo, hi, t, expected):
    assert right_derivative(curve(fn, lo, hi), t) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("fn, lo, hi, t, expected", [
    (lambda t: abs(t - 1), -2, 2, 0.0, -1.0),
    (lambda t: max(1.0, 1.0 + t), -1, 1, 0.0, 0.0),
    (lambda t: t * t, -2, 2, 0.0, 0.0),
])
def test_left_derivative(fn, lo, hi, t, expected):
    assert left_derivative(curve(fn, lo, hi), t) == pytest.approx(expected, abs=1e-9)


def test_endpoint_derivatives():
    c = curve(lambda t: t * t, 0.0, 1.0)
    assert right_derivative(c, 0.0) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        left_derivative(c, 0.0)
    with pytest.raises(DomainError):
        right_derivative(c, 1.0)


def test_step_leaving_domain_is_an_error():
    c = curve(abs, -1.0, 1.0)
    with pytest.raises(DomainError):
        right_derivative(c, 0.999, DerivSchedule(delta0=0.1))


def test_kink_below_resolution_is_flagged():
    # a kink 1e-9 to the right is invisible above the rounding floor; it reads
    # as a kink at t, flagged, instead of a non-convexity error
    d = one_sided_derivatives(curve(lambda t: abs(t - 1) + abs(t - 1e-9)), 0.0)
    assert d.left == pytest.approx(-2.0, abs=1e-9) and d.left_converged
    assert not d.right_converged
    assert d.left <= d.right <= 0.0


def test_nonconvex_evaluator_detected():
    with pytest.raises(NonConvexError):
        right_derivative(curve(lambda t: -t * t), 0.5)
    with pytest.raises(NonConvexError):
        one_sided_derivatives(curve(lambda t: -abs(t)), 0.0)


def test_quotients_vectorized():
    est, ok = quotient_limits(lambda t: np.array([abs(t), 2 * t, t * t]), 0.0, +1, 0.1)
    assert np.allclose(est, [1.0, 2.0, 0.0], atol=1e-9)
    assert ok.all()


def test_schedule_validation():
    with pytest.raises(InputError):
        DerivSchedule(shrink=1.0)
    with pytest.raises(InputError):
        DerivSchedule(delta0=0.0)
    with pytest.raises(InputError):
        DerivSchedule(tol_deriv=-1.0)


@pytest.mark.parametrize("fn, expected", [
    (abs, True),
    (lambda t: -t * t, False),
    (lambda t: 1 + t * math.exp(-1), True),
])
def test_check_convex(fn, expected):
    assert check_convex(curve(fn), 401) is expected


def test_check_convex_grid_size():
    with pytest.raises(InputError):
        check_convex(curve(abs), 2)


@pytest.mark.parametrize("fn, lo, hi, t_min, v_min", [
    (lambda t: 1 + abs(t), -2, 2, 0.0, 1.0),
    (lambda t: max(abs(1 - t), abs(1 + t)), -3, 3, 0.0, 1.0),
    (lambda t: 2.5 * abs(1 + t), -3, 3, -1.0, 0.0),
])
def test_minimize_convex(fn, lo, hi, t_min, v_min):
    t, v = minimize_convex(curve(fn, lo, hi), tol_t=1e-9)
    assert t == pytest.approx(t_min, abs=1e-8)
    assert v == pytest.approx(v_min, abs=1e-8)


def test_minimize_detects_nonconvexity():
    with pytest.raises(NonConvexError):
        minimize_convex(curve(lambda t: math.cos(4 * t), -2, 2))


def test_minimize_auto_brackets():
    t, v = minimize_convex_auto(lambda s: abs(s - 37.0) + 2.0)
    assert t == pytest.approx(37.0, abs=1e-8)
    assert v == pytest.approx(2.0)
    with pytest.raises(ConvergenceError):
        minimize_convex_auto(lambda s: 1.0, max_doublings=5)


def test_limsup_check_examples():
    limit = curve(abs, -1, 1)
    smooth = [curve(lambda t, n=n: math.sqrt(t * t + 1.0 / n), -1, 1) for n in (10**k for k in range(1, 7))]
    assert limsup_derivative_check(smooth, limit, 0.0)
    assert limsup_derivative_check([limit] * 4, limit, 0.0)
    shifted = [curve(lambda t, n=n: abs(t) + 1.0 / n, -2, 2) for n in (10**k for k in range(2, 8))]
    assert limsup_derivative_check(shifted, curve(abs, -2, 2), 1.0)


def test_limsup_check_rejects_non_convergent():
    with pytest.raises(InputError):
        limsup_derivative_check([curve(lambda t: abs(t) + 1.0, -1, 1)], curve(abs, -1, 1), 0.0)


kinks = st.lists(st.tuples(st.floats(0.01, 3.0), st.floats(-1.5, 1.5)), min_size=1, max_size=5)


def mixture(ws, slope, quad):
    return lambda t: sum(w * abs(t - a) for w, a in ws) + slope * t + quad * t * t


@settings(max_examples=60, deadline=None)
@given(kinks, st.floats(-2, 2), st.floats(0, 2), st.floats(-1.8, 1.8))
def test_derivative_order_and_monotone_quotients(ws, slope, quad, t):
    c = curve(mixture(ws, slope, quad))
    d = one_sided_derivatives(c, t)
    # a kink closer to t than the rounding floor allows leaves the estimate unconverged
    slack = 1e-7 if d.right_converged and d.left_converged else 1e-5
    assert d.left <= d.right + slack
    q = [(c(t + h) - c(t)) / h for h in (0.1, 0.05, 0.025, 0.0125)]
    assert all(b <= a + 1e-9 for a, b in zip(q, q[1:]))


@settings(max_examples=60, deadline=None)
@given(kinks, st.floats(-2, 2), st.floats(0, 2), st.floats(-1.8, 1.8))
def test_derivative_matches_closed_form(ws, slope, quad, t):
    if min(abs(t - a) for _, a in ws) < 0.05:
        return
    exact = sum(w * math.copysign(1.0, t - a) for w, a in ws) + slope + 2 * quad * t
    d = one_sided_derivatives(curve(mixture(ws, slope, quad)), t)
    assert d.right == pytest.approx(exact, abs=1e-6)
    assert d.left == pytest.approx(exact, abs=1e-6)
    assert d.is_differentiable(1e-6)


@settings(max_examples=60, deadline=None)
@given(kinks, st.floats(-0.5, 0.5), st.floats(0.05, 2))
def test_minimize_matches_grid(ws, slope, quad):
    fn = mixture(ws, slope, quad)
    t, v = minimize_convex(curve(fn, -3, 3), tol_t=1e-9)
    grid = np.linspace(-3, 3, 20001)
    vals = np.array([fn(s) for s in grid])
    assert v <= vals.min() + 1e-9
    assert abs(t - grid[vals.argmin()]) <= 2 * 6 / 20000 + 1e-9
