"""One-dimensional convex curves.

Curves are evaluator-backed: a :class:`ConvexCurve` wraps a callable and a
closed domain, never a table of samples. One-sided derivatives are limits of
difference quotients; for a convex curve the forward quotient is
non-increasing as the step shrinks and the backward quotient is
non-decreasing, and both facts are checked while iterating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError, InputError, NonConvexError

TOL_CONVEX = 1e-9
TOL_DERIV = 1e-7

_EPS = float(np.finfo(float).eps)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ConvexCurve:
    evaluator: Callable[[float], float]
    lo: float
    hi: float
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise InputError(f"curve {self.label!r}: bad domain [{self.lo}, {self.hi}]")

    def __call__(self, t: float) -> float:
        return float(self.evaluator(t))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def grid(self, size: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, size)


@dataclass(frozen=True)
class DerivSchedule:
    """Step schedule for difference quotients.

    ``delta0=None`` means one percent of the domain width.
    """

    delta0: float | None = None
    shrink: float = 0.5
    max_steps: int = 30
    tol_deriv: float = TOL_DERIV
    tol_convex: float = TOL_CONVEX

    def __post_init__(self):
        if self.delta0 is not None and not self.delta0 > 0:
            raise InputError("delta0 must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise InputError("shrink factor must lie in (0, 1)")
        if self.max_steps < 2:
            raise InputError("max_steps must be at least 2")
        if not (self.tol_deriv > 0 and self.tol_convex > 0):
            raise InputError("tolerances must be positive")

    def first_step(self, width: float) -> float:
        return self.delta0 if self.delta0 is not None else 1e-2 * width


DEFAULT_SCHEDULE = DerivSchedule()


@dataclass(frozen=True)
class DerivPair:
    right: float
    left: float
    right_converged: bool
    left_converged: bool

    def gap(self) -> float:
        return self.right - self.left

    def is_differentiable(self, tol: float = TOL_DERIV) -> bool:
        return abs(self.right - self.left) < tol


def quotient_limits(evaluate, t, direction, delta0, schedule=DEFAULT_SCHEDULE, label=""):
    """Vectorized one-sided derivative estimates.

    ``evaluate`` maps a scalar ``t`` to an array of values (one entry per
    curve). ``direction`` is +1 for right derivatives, -1 for left ones.
    Returns ``(estimates, converged)`` arrays.

    Each quotient pair gives one Richardson estimate ``(q_k - s q_{k-1}) / (1 - s)``,
    exact on piecewise-linear stretches and second-order accurate on smooth
    ones. An entry stops once three consecutive estimates agree within
    ``tol_deriv``. It is reported as converged only if the rounding error of
    the quotients at that step is also below ``tol_deriv``.
    """
    est, done, _ = _quotients(evaluate, t, direction, delta0, schedule, label)
    return est, done


def _quotients(evaluate, t, direction, delta0, schedule, label):
    """``quotient_limits`` plus the rounding floor behind each estimate.

    An entry only counts as converged when that floor is below ``tol_deriv``.
    """
    v0 = np.atleast_1d(np.asarray(evaluate(t), dtype=float))
    est = np.zeros_like(v0)
    done = np.zeros(v0.shape, dtype=bool)
    floor = np.zeros_like(v0)
    streak = np.zeros(v0.shape, dtype=int)
    best = np.full_like(v0, np.inf)  # |r - r_prev| + floor of the best estimate so far
    best_est = np.zeros_like(v0)
    q_prev = r_prev = None
    delta = float(delta0)
    s = schedule.shrink
    for _ in range(schedule.max_steps):
        v = np.atleast_1d(np.asarray(evaluate(t + direction * delta), dtype=float))
        q = direction * (v - v0) / delta
        if not np.all(np.isfinite(q)):
            raise NonConvexError(f"{label}: non-finite difference quotient at t={t}")
        if q_prev is not None:
            step_floor = 8.0 * _EPS * (np.abs(v) + np.abs(v0)) / delta
            wrong_way = (direction * (q - q_prev) > schedule.tol_convex + step_floor) & ~done
            if wrong_way.any():
                k = int(np.flatnonzero(wrong_way)[0])
                raise NonConvexError(
                    f"{label}: difference quotients not monotone at t={t} "
                    f"(entry {k}, step {delta:.3g}: {q_prev[k]!r} -> {q[k]!r})"
                )
            r = (q - s * q_prev) / (1.0 - s)
            if r_prev is not None:
                # one agreement can be a coincidence right after a kink is crossed
                change = np.abs(r - r_prev)
                streak = np.where(change < schedule.tol_deriv, streak + 1, 0)
                better = ~done & (change + step_floor < best)
                best[better] = change[better] + step_floor[better]
                best_est[better] = r[better]
                floor[better] = step_floor[better]
                fresh = ~done & (streak >= 2)
                est[fresh] = r[fresh]
                floor[fresh] = step_floor[fresh]
                done |= fresh
                if done.all():
                    break
            r_prev = r
        q_prev = q
        delta *= s
    rest = ~done
    if rest.any():
        # unconverged: the estimate best supported by its neighbour and the rounding floor
        last = q_prev if r_prev is None else r_prev
        est[rest] = np.where(np.isfinite(best), best_est, last)[rest]
    return est, done & (floor <= schedule.tol_deriv), floor


def _right_step(curve: ConvexCurve, t: float, schedule: DerivSchedule) -> float:
    if not curve.lo <= t < curve.hi:
        raise DomainError(f"right derivative at t={t} outside [{curve.lo}, {curve.hi})")
    delta0 = schedule.first_step(curve.width)
    if t + delta0 > curve.hi:
        raise DomainError(f"t+delta0={t + delta0} exceeds hi={curve.hi}; shrink delta0")
    return delta0


def _left_step(curve: ConvexCurve, t: float, schedule: DerivSchedule) -> float:
    if not curve.lo < t <= curve.hi:
        raise DomainError(f"left derivative at t={t} outside ({curve.lo}, {curve.hi}]")
    delta0 = schedule.first_step(curve.width)
    if t - delta0 < curve.lo:
        raise DomainError(f"t-delta0={t - delta0} below lo={curve.lo}; shrink delta0")
    return delta0


def _right(curve, t, schedule, with_floor=False):
    est, ok, floor = _quotients(curve, t, +1, _right_step(curve, t, schedule), schedule, curve.label)
    out = float(est[0]), bool(ok[0])
    return out + (float(floor[0]),) if with_floor else out


def _left(curve, t, schedule, with_floor=False):
    est, ok, floor = _quotients(curve, t, -1, _left_step(curve, t, schedule), schedule, curve.label)
    out = float(est[0]), bool(ok[0])
    return out + (float(floor[0]),) if with_floor else out


def right_derivative(curve: ConvexCurve, t: float, schedule: DerivSchedule = DEFAULT_SCHEDULE) -> float:
    """Right derivative of ``curve`` at ``t``."""
    return _right(curve, t, schedule)[0]


def left_derivative(curve: ConvexCurve, t: float, schedule: DerivSchedule = DEFAULT_SCHEDULE) -> float:
    """Left derivative of ``curve`` at ``t``."""
    return _left(curve, t, schedule)[0]


def one_sided_derivatives(curve: ConvexCurve, t: float, schedule: DerivSchedule = DEFAULT_SCHEDULE) -> DerivPair:
    r, r_ok, r_floor = _right(curve, t, schedule, with_floor=True)
    l, l_ok, l_floor = _left(curve, t, schedule, with_floor=True)
    # a kink within a few steps of t keeps the quotients moving down to tiny
    # steps, where rounding dominates
    if l > r + schedule.tol_deriv + r_floor + l_floor:
        raise NonConvexError(f"{curve.label}: left derivative {l} exceeds right {r} at t={t}")
    return DerivPair(right=r, left=l, right_converged=r_ok, left_converged=l_ok)


def check_convex(curve: ConvexCurve, grid_size: int = 401, tol_convex: float = TOL_CONVEX) -> bool:
    """True iff second differences on a uniform grid are all ``>= -tol_convex``."""
    if grid_size < 3:
        raise InputError("grid_size must be at least 3")
    values = np.array([curve(t) for t in curve.grid(grid_size)])
    smin, _ = kernels.min_second_difference(values[None, :])
    return bool(smin[0] >= -tol_convex)


def _chord_excess(ta, fa, tb, fb, tc, fc):
    """How far ``(tb, fb)`` lies above the chord from a to c."""
    w = (tc - tb) / (tc - ta)
    return fb - (w * fa + (1.0 - w) * fc)


def minimize_convex(curve: ConvexCurve, tol_t: float = 1e-8, tol_convex: float = TOL_CONVEX):
    """Golden-section minimization over the whole domain.

    Returns ``(t_min, v_min)``, the best evaluated point once the bracket is
    narrower than ``tol_t``. Each retained quadruple is checked against the
    chord condition; a violation beyond ``tol_convex`` (scaled by the values'
    magnitude) raises :class:`NonConvexError`.
    """
    if not tol_t > 0:
        raise InputError("tol_t must be positive")
    a, b = curve.lo, curve.hi
    fa, fb = curve(a), curve(b)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = curve(x1), curve(x2)
    best_t, best_v = min(((a, fa), (x1, f1), (x2, f2), (b, fb)), key=lambda p: p[1])
    while b - a > tol_t:
        slack = tol_convex + 8.0 * _EPS * max(abs(fa), abs(f1), abs(f2), abs(fb))
        if (_chord_excess(a, fa, x1, f1, x2, f2) > slack
                or _chord_excess(x1, f1, x2, f2, b, fb) > slack
                or _chord_excess(a, fa, x1, f1, b, fb) > slack):
            raise NonConvexError(
                f"{curve.label}: chord condition violated on [{a}, {b}]"
            )
        if f1 <= f2:
            b, fb = x2, f2
            x2, f2 = x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = curve(x1)
            new = (x1, f1)
        else:
            a, fa = x1, f1
            x1, f1 = x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = curve(x2)
            new = (x2, f2)
        if new[1] < best_v:
            best_t, best_v = new
    return float(best_t), float(best_v)


def minimize_convex_auto(evaluator: Callable[[float], float], tol_t: float = 1e-10,
                         start: float = 1.0, max_doublings: int = 60, label: str = ""):
    """Minimize a convex function on the whole real line.

    The bracket ``[-L, L]`` starts at ``L=start`` and doubles until both ends
    exceed the value at 0; by convexity the minimum then lies inside.
    """
    center = float(evaluator(0.0))
    half = float(start)
    for _ in range(max_doublings):
        if evaluator(-half) > center and evaluator(half) > center:
            curve = ConvexCurve(evaluator, -half, half, label)
            return minimize_convex(curve, tol_t=tol_t)
        half *= 2.0
    raise ConvergenceError(f"{label}: bracket expansion exceeded {half:g}")


def limsup_derivative_check(curves: Sequence[ConvexCurve], limit: ConvexCurve, t: float,
                            schedule: DerivSchedule = DEFAULT_SCHEDULE,
                            tol_pointwise: float = 1e-2, tail_fraction: float = 0.5,
                            sample_size: int = 21) -> bool:
    """Numerical check of ``limsup f_n'(t+) <= f'(t+)`` for ``f_n -> f``.

    The pointwise-convergence hypothesis is validated on a sample grid around
    ``t``: the last curve must be within ``tol_pointwise`` of ``limit``.
    The limsup is taken as the maximum over the tail of the sequence.
    """
    if len(curves) == 0:
        raise InputError("empty curve sequence")
    half = 0.1 * limit.width
    ts = np.linspace(max(limit.lo, t - half), min(limit.hi, t + half), sample_size)
    target = np.array([limit(s) for s in ts])
    last = np.array([curves[-1](s) for s in ts])
    gap = float(np.max(np.abs(last - target)))
    if gap > tol_pointwise:
        raise InputError(
            f"sequence not within {tol_pointwise} of the limit near t={t} (gap {gap:.3g})"
        )
    start = min(len(curves) - 1, int(len(curves) * (1.0 - tail_fraction)))
    tail = [right_derivative(c, t, schedule) for c in curves[start:]]
    return max(tail) <= right_derivative(limit, t, schedule) + schedule.tol_deriv
