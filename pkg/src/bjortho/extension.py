"""Convex extensions ``p(x, t)`` of a field ``f`` on a finite metric space.

A convex extension agrees with ``f`` at ``t = 0`` and is convex in ``t`` for
every point. Its sup envelope ``g(t) = max_x p(x, t)`` is again convex, and
the extension is a Birkhoff-James (BJ) extension when ``g`` is minimized at
``t = 0``. This module builds extensions from a handful of families, computes
envelopes, and decides the BJ property two ways: by brute force on ``g`` and
by one-sided derivatives of the sections over the sup-attaining set.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .convex1d import (
    DEFAULT_SCHEDULE,
    TOL_CONVEX,
    TOL_DERIV,
    ConvexCurve,
    DerivSchedule,
    minimize_convex,
    quotient_limits,
)
from .errors import ConvergenceError, DomainError, InputError, NumericalError
from .norms import Norm, parse_norm
from .space import DiscreteMetricSpace, ScalarField, SupSet, sup_attaining_set

logger = logging.getLogger(__name__)

TOL_VERDICT = 1e-9
T_GRID_SIZE = 401
_EPS = float(np.finfo(float).eps)


# -- shift functions for the ``shifted`` family --------------------------------

_SHIFT_KINDS = {
    "zero": lambda u: np.zeros_like(u),
    "abs": np.abs,
    "square": np.square,
    "relu": lambda u: np.maximum(u, 0.0),
    "exp": np.exp,
}


@dataclass(frozen=True)
class ShiftFunction:
    """Convex ``h(t) = scale * phi(t - center)`` with ``phi`` from a fixed list."""

    kind: str = "abs"
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _SHIFT_KINDS:
            raise InputError(f"unknown shift kind {self.kind!r}; choose from {sorted(_SHIFT_KINDS)}")
        if not self.scale >= 0:
            raise InputError("shift scale must be non-negative (convexity)")

    def __call__(self, t):
        return self.scale * _SHIFT_KINDS[self.kind](np.asarray(t, dtype=np.float64) - self.center)

    def to_spec(self):
        return {"kind": self.kind, "center": self.center, "scale": self.scale}


# -- families -----------------------------------------------------------------

class Family:
    """Vectorized ``p(x, t)``; subclasses fill in :meth:`grid_values`."""

    kind = ""

    def __init__(self, n: int):
        self.n = n

    def grid_values(self, ts, idx=None) -> np.ndarray:
        """Values for rows ``idx`` (all rows when None) and times ``ts``: shape ``(k, m)``."""
        raise NotImplementedError

    def rows(self, idx, t: float) -> np.ndarray:
        return self.grid_values(np.array([t], dtype=np.float64), idx)[:, 0]

    def values(self, t: float) -> np.ndarray:
        return self.rows(None, t)

    def slope_bound(self) -> float | None:
        """Uniform bound on ``|p(x, t) - p(x, s)| / |t - s|``, if known."""
        return None

    def modulus(self) -> Callable | None:
        L = self.slope_bound()
        if L is None:
            return None
        return lambda t: L * np.asarray(t, dtype=np.float64)

    def natural_base(self) -> np.ndarray | None:
        """``p(., 0)`` when the family determines it."""
        return self.values(0.0)

    def to_spec(self) -> dict:
        raise NotImplementedError


def _sel(a, idx):
    return a if idx is None else a[np.asarray(idx, dtype=np.int64)]


class Affine(Family):
    """``p(x, t) = f(x) + b(x) t``."""

    kind = "affine"

    def __init__(self, f, b):
        self.f = np.asarray(f, dtype=np.float64)
        self.b = np.broadcast_to(np.asarray(b, dtype=np.float64), self.f.shape).copy()
        super().__init__(self.f.size)

    def grid_values(self, ts, idx=None):
        ts = np.asarray(ts, dtype=np.float64)
        return _sel(self.f, idx)[:, None] + _sel(self.b, idx)[:, None] * ts[None, :]

    def slope_bound(self):
        return float(np.abs(self.b).max())

    def to_spec(self):
        return {"kind": self.kind, "f": self.f.tolist(), "b": self.b.tolist()}


class AbsAffine(Family):
    """``p(x, t) = |a(x) + b(x) t|``; the base field is ``|a|``."""

    kind = "abs_affine"

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.broadcast_to(np.asarray(b, dtype=np.float64), self.a.shape).copy()
        super().__init__(self.a.size)

    def grid_values(self, ts, idx=None):
        ts = np.asarray(ts, dtype=np.float64)
        return np.abs(_sel(self.a, idx)[:, None] + _sel(self.b, idx)[:, None] * ts[None, :])

    def slope_bound(self):
        return float(np.abs(self.b).max())

    def to_spec(self):
        return {"kind": self.kind, "a": self.a.tolist(), "b": self.b.tolist()}


class Shifted(Family):
    """``p(x, t) = f(x) + h(t)`` with ``h`` convex; ``h(0)`` is subtracted so
    that ``p(x, 0) = f(x)`` holds for any ``h``."""

    kind = "shifted"

    def __init__(self, f, h):
        self.f = np.asarray(f, dtype=np.float64)
        self.h = h
        self._h0 = float(np.asarray(h(np.array([0.0])))[0])
        super().__init__(self.f.size)

    def _hh(self, ts):
        return np.asarray(self.h(np.asarray(ts, dtype=np.float64)), dtype=np.float64) - self._h0

    def grid_values(self, ts, idx=None):
        return _sel(self.f, idx)[:, None] + self._hh(ts)[None, :]

    def modulus(self):
        return self._hh

    def to_spec(self):
        h = self.h.to_spec() if isinstance(self.h, ShiftFunction) else repr(self.h)
        return {"kind": self.kind, "f": self.f.tolist(), "h": h}


class NormFamily(Family):
    """``p(x, t) = ||A(x) + t B(x)||`` for vector fields ``A``, ``B``."""

    kind = "norm_family"

    def __init__(self, A, B, norm="euclidean"):
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        if self.A.shape != self.B.shape:
            raise InputError(f"A has shape {self.A.shape} but B has {self.B.shape}")
        self.norm: Norm = parse_norm(norm)
        super().__init__(self.A.shape[0])

    def grid_values(self, ts, idx=None):
        ts = np.asarray(ts, dtype=np.float64)
        A = _sel(self.A, idx)
        B = _sel(self.B, idx)
        return self.norm(A[:, None, :] + ts[None, :, None] * B[:, None, :], axis=-1)

    def slope_bound(self):
        return float(self.norm(self.B, axis=-1).max())

    def to_spec(self):
        return {"kind": self.kind, "A": self.A.tolist(), "B": self.B.tolist(), "norm": self.norm.tag}


class Table(Family):
    """Samples on a ``t`` grid, linearly interpolated in ``t``."""

    kind = "table"

    def __init__(self, t_grid, values):
        self.t = np.asarray(t_grid, dtype=np.float64)
        self.v = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if self.t.ndim != 1 or self.t.size < 3:
            raise InputError("table t_grid needs at least 3 values")
        if np.any(np.diff(self.t) <= 0):
            raise InputError("table t_grid must be strictly increasing")
        if not self.t[0] < 0.0 < self.t[-1] or 0.0 not in self.t:
            raise InputError("table t_grid must contain 0 strictly inside")
        if self.v.shape[1] != self.t.size:
            raise InputError(f"table values have {self.v.shape[1]} columns for {self.t.size} grid times")
        if not np.all(np.isfinite(self.v)):
            raise InputError("table values must be finite")
        super().__init__(self.v.shape[0])

    def grid_values(self, ts, idx=None):
        ts = np.asarray(ts, dtype=np.float64)
        v = _sel(self.v, idx)
        if np.any(ts < self.t[0]) or np.any(ts > self.t[-1]):
            raise DomainError("table evaluated outside its t_grid")
        j = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, self.t.size - 2)
        w = (ts - self.t[j]) / (self.t[j + 1] - self.t[j])
        return v[:, j] * (1.0 - w) + v[:, j + 1] * w

    def slopes(self):
        return np.diff(self.v, axis=1) / np.diff(self.t)[None, :]

    def slope_bound(self):
        return float(np.abs(self.slopes()).max())

    def to_spec(self):
        return {"kind": self.kind, "t_grid": self.t.tolist(), "values": self.v.tolist()}


def _field_values(raw, space: DiscreteMetricSpace, name: str):
    """A number (broadcast), a list aligned to the points, or ``"x"`` for 1-D coordinates."""
    if isinstance(raw, str):
        if raw != "x":
            raise InputError(f"{name}: only the string 'x' is understood")
        if space.coords is None:
            raise InputError(f"{name}='x' needs a points_1d space")
        return np.array(space.coords, dtype=np.float64)
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(space.n, float(arr))
    if arr.shape[0] != space.n:
        raise InputError(f"{name}: {arr.shape[0]} entries for {space.n} points")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: values must be finite")
    return arr


def family_from_spec(spec: dict, space: DiscreteMetricSpace, base: ScalarField | None = None) -> Family:
    """Build a family from its JSON description (see README for the schema)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InputError("family spec must be an object with a 'kind'")
    kind = spec["kind"]

    def base_f():
        if "f" in spec:
            return _field_values(spec["f"], space, "f")
        if base is None:
            raise InputError(f"family {kind!r} needs a base field 'f'")
        return base.values

    if kind == "affine":
        return Affine(base_f(), _field_values(spec.get("b", 0.0), space, "b"))
    if kind == "abs_affine":
        return AbsAffine(_field_values(spec["a"], space, "a"), _field_values(spec.get("b", 0.0), space, "b"))
    if kind == "shifted":
        h = spec.get("h", "abs")
        h = ShiftFunction(h) if isinstance(h, str) else ShiftFunction(**h)
        return Shifted(base_f(), h)
    if kind == "norm_family":
        fam = NormFamily(spec["A"], spec["B"], spec.get("norm", "euclidean"))
        if fam.n != space.n:
            raise InputError(f"norm_family has {fam.n} rows for {space.n} points")
        return fam
    if kind == "table":
        fam = Table(spec["t_grid"], spec["values"])
        if fam.n != space.n:
            raise InputError(f"table has {fam.n} rows for {space.n} points")
        return fam
    raise InputError(f"unknown family kind {kind!r}")


# -- extensions ---------------------------------------------------------------

def make_t_grid(lo: float, hi: float, size: int = T_GRID_SIZE) -> np.ndarray:
    """Uniform-per-side grid on ``[lo, hi]`` containing 0 exactly."""
    if size < 3:
        raise InputError("t-grid size must be at least 3")
    if not lo < 0.0 < hi:
        raise InputError("t-window must contain 0 in its interior")
    n_left = min(size - 2, max(1, round((size - 1) * (-lo) / (hi - lo))))
    left = np.linspace(lo, 0.0, n_left + 1)
    right = np.linspace(0.0, hi, size - n_left)
    return np.concatenate([left, right[1:]])


@dataclass(frozen=True, eq=False)
class ConvexExtension:
    space: DiscreteMetricSpace
    base: ScalarField
    family: Family
    t_lo: float
    t_hi: float
    modulus: Callable | None = None
    label: str = ""

    @property
    def width(self) -> float:
        return self.t_hi - self.t_lo

    def grid_values(self, ts, idx=None) -> np.ndarray:
        return self.family.grid_values(ts, idx)

    def rows(self, idx, t: float) -> np.ndarray:
        return self.family.rows(idx, t)

    def section(self, i: int) -> ConvexCurve:
        """``t -> p(x_i, t)`` on the extension's t-window."""
        rows = np.array([i])
        return ConvexCurve(lambda t: float(self.family.rows(rows, t)[0]), self.t_lo, self.t_hi,
                           label=f"{self.label}p({self.space.label(i)}, .)")

    def envelope_value(self, t: float) -> float:
        return float(self.family.values(t).max())

    def envelope_curve(self) -> ConvexCurve:
        return ConvexCurve(self.envelope_value, self.t_lo, self.t_hi, label=f"{self.label}g")

    def t_grid(self, size: int = T_GRID_SIZE) -> np.ndarray:
        return make_t_grid(self.t_lo, self.t_hi, size)


def default_half_width(base: ScalarField) -> float:
    return 2.0 * (1.0 + base.spread)


def build_extension(space: DiscreteMetricSpace, base: ScalarField | None, family_spec,
                    *, t_half_width: float | None = None, modulus: Callable | None = None,
                    tol_convex: float = TOL_CONVEX, grid_size: int = T_GRID_SIZE,
                    label: str = "") -> ConvexExtension:
    """Build and validate a convex extension.

    ``family_spec`` is a :class:`Family` or its JSON description. ``base`` may
    be None for families that determine it (``abs_affine``, ``norm_family``,
    ``table``). Checks ``p(x, 0) = f(x)``, convexity of every section on a
    uniform grid, slope monotonicity for tables, and the continuity modulus on
    sampled triples; any failure raises :class:`InputError` naming the point.
    """
    fam = family_spec if isinstance(family_spec, Family) else family_from_spec(family_spec, space, base)
    if fam.n != space.n:
        raise InputError(f"family has {fam.n} rows for {space.n} points")
    if base is None:
        base = ScalarField(space, fam.natural_base())
    elif base.space is not space:
        raise InputError("base field lives on a different space")

    if isinstance(fam, Table):
        t_lo, t_hi = float(fam.t[0]), float(fam.t[-1])
        if t_half_width is not None:
            t_lo, t_hi = max(t_lo, -t_half_width), min(t_hi, t_half_width)
    else:
        T = default_half_width(base) if t_half_width is None else float(t_half_width)
        if not T > 0:
            raise InputError("t_half_width must be positive")
        t_lo, t_hi = -T, T

    f = base.values
    p0 = fam.values(0.0)
    off = np.abs(p0 - f) > tol_convex * (1.0 + np.abs(f))
    if off.any():
        i = int(np.flatnonzero(off)[0])
        raise InputError(
            f"p(x, 0) != f(x) at point {space.label(i)} (index {i}): {p0[i]!r} vs {f[i]!r}"
        )

    if isinstance(fam, Table):
        kinks = np.diff(fam.slopes(), axis=1)
        bad = kinks < -tol_convex
        if bad.any():
            i, j = (int(v) for v in np.argwhere(bad)[0])
            raise InputError(
                f"table slopes decrease at point {space.label(i)} (index {i}) near t={fam.t[j + 1]!r}"
            )

    ts = np.linspace(t_lo, t_hi, grid_size)
    smin, where = kernels.min_second_difference(fam.grid_values(ts))
    bad = smin < -tol_convex
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InputError(
            f"section at point {space.label(i)} (index {i}) is not convex near t={ts[where[i]]!r} "
            f"(second difference {smin[i]!r})"
        )

    if modulus is None:
        modulus = fam.modulus()
    if modulus is not None:
        _check_modulus(space, fam, modulus, t_lo, t_hi, tol_convex)

    return ConvexExtension(space, base, fam, t_lo, t_hi, modulus, label)


def _check_modulus(space, fam, modulus, t_lo, t_hi, tol, n_points=64, n_times=21):
    h0 = float(np.asarray(modulus(np.array([0.0])))[0])
    if abs(h0) > tol:
        raise InputError(f"continuity modulus has h(0) = {h0!r}, expected 0")
    idx = np.unique(np.linspace(0, space.n - 1, min(space.n, n_points)).round().astype(np.int64))
    ts = np.linspace(t_lo, t_hi, n_times)
    p = fam.grid_values(ts, idx)
    h = np.asarray(modulus(ts), dtype=np.float64)
    lhs = np.abs(p[:, :, None] - p[:, None, :])
    rhs = np.abs(h[:, None] - h[None, :])
    slack = tol * (1.0 + np.abs(p[:, :, None]) + np.abs(p[:, None, :]))
    bad = lhs > rhs[None, :, :] + slack
    if bad.any():
        k, a, b = (int(v) for v in np.argwhere(bad)[0])
        i = int(idx[k])
        raise InputError(
            f"continuity modulus violated at point {space.label(i)} (index {i}) "
            f"for t={ts[a]!r}, s={ts[b]!r}"
        )


# -- envelope and the brute-force test ----------------------------------------

@dataclass(frozen=True, eq=False)
class Envelope:
    t_grid: np.ndarray
    values: np.ndarray
    argmax: np.ndarray

    @property
    def zero_index(self) -> int:
        return int(np.flatnonzero(self.t_grid == 0.0)[0])

    @property
    def g0(self) -> float:
        return float(self.values[self.zero_index])

    def convexity_defect(self) -> float:
        """Largest amount by which an interior grid value exceeds the chord of its neighbours."""
        t, v = self.t_grid, self.values
        if t.size < 3:
            return 0.0
        w = (t[2:] - t[1:-1]) / (t[2:] - t[:-2])
        return float(np.max(v[1:-1] - (w * v[:-2] + (1.0 - w) * v[2:])))

    def is_convex(self, tol: float = TOL_CONVEX) -> bool:
        scale = 1.0 + float(np.abs(self.values).max())
        return self.convexity_defect() <= tol * scale

    def rows(self):
        return [(float(t), float(g), int(k)) for t, g, k in zip(self.t_grid, self.values, self.argmax)]


def envelope(ext: ConvexExtension, t_grid=None) -> Envelope:
    """Pointwise maximum of the sections on a t-grid containing 0.

    Ties go to the lowest point index.
    """
    ts = ext.t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if not np.any(ts == 0.0):
        raise InputError("envelope t-grid must contain 0")
    if np.any(np.diff(ts) <= 0):
        raise InputError("envelope t-grid must be strictly increasing")
    workers = kernels.thread_count()
    if workers > 1 and ext.space.n * ts.size > 2_000_000:
        chunks = np.array_split(ts, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: kernels.column_max_argmax(ext.grid_values(c)), chunks))
        values = np.concatenate([p[0] for p in parts])
        arg = np.concatenate([p[1] for p in parts])
    else:
        values, arg = kernels.column_max_argmax(ext.grid_values(ts))
    return Envelope(ts, values, arg)


@dataclass(frozen=True)
class BruteForceResult:
    verdict: bool
    g0: float
    grid_min: float
    grid_argmin_t: float
    refined_min: float
    refined_t: float
    resolution_bound: float
    tol: float

    def __bool__(self):
        return self.verdict


def is_bj_extension_bruteforce(ext: ConvexExtension, t_grid=None, tol: float = TOL_VERDICT) -> BruteForceResult:
    """Decide ``g(t) >= g(0) - tol`` by scanning the envelope on a grid.

    By convexity the true minimizer lies between the neighbours of the grid
    argmin; that bracket is then refined with :func:`minimize_convex`. The
    largest grid slope times the grid step is recorded as the a-priori bound
    on how far the grid minimum can sit above the true one.
    """
    env = envelope(ext, t_grid)
    ts, gv = env.t_grid, env.values
    k = int(np.argmin(gv))
    slopes = np.abs(np.diff(gv) / np.diff(ts))
    bound = float(slopes.max() * np.diff(ts).max()) if slopes.size else 0.0
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
    t_ref, v_ref = minimize_convex(ConvexCurve(ext.envelope_value, lo, hi, "g"),
                                   tol_t=max(1e-12, 1e-12 * (hi - lo)))
    best = min(float(gv[k]), v_ref)
    verdict = best >= env.g0 - tol
    return BruteForceResult(verdict, env.g0, float(gv[k]), float(ts[k]), v_ref, t_ref, bound, tol)


# -- derivative criterion and witnesses ----------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    verdict: bool
    witness: int | None
    right_witness: tuple[int, float] | None
    left_witness: tuple[int, float] | None
    sup_set: SupSet | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict != (self.right_witness is not None and self.left_witness is not None):
            raise ValueError("verdict must equal presence of both witnesses")

    def __bool__(self):
        return self.verdict


def point_derivatives(ext: ConvexExtension, idx, t: float,
                      schedule: DerivSchedule = DEFAULT_SCHEDULE, step_cap: float | None = None):
    """Right and left t-derivatives of the sections at rows ``idx``.

    Returns ``(right, left, right_converged, left_converged)`` arrays.
    """
    idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
    d0 = schedule.first_step(ext.width)
    if step_cap is not None:
        d0 = min(d0, step_cap)
    dr, dl = min(d0, ext.t_hi - t), min(d0, t - ext.t_lo)
    if not (dr > 0 and dl > 0):
        raise DomainError(f"t={t} is not inside the t-window [{ext.t_lo}, {ext.t_hi}]")
    fn = lambda s: ext.rows(idx, s)
    r, r_ok = quotient_limits(fn, t, +1, dr, schedule, ext.label or "section")
    l, l_ok = quotient_limits(fn, t, -1, dl, schedule, ext.label or "section")
    return r, l, r_ok, l_ok


def envelope_derivatives(ext: ConvexExtension, t: float,
                         schedule: DerivSchedule = DEFAULT_SCHEDULE, step_cap: float | None = None):
    """``(g'(t+), g'(t-))`` for the sup envelope."""
    d0 = schedule.first_step(ext.width)
    if step_cap is not None:
        d0 = min(d0, step_cap)
    dr, dl = min(d0, ext.t_hi - t), min(d0, t - ext.t_lo)
    if not (dr > 0 and dl > 0):
        raise DomainError(f"t={t} is not inside the t-window [{ext.t_lo}, {ext.t_hi}]")
    r, _ = quotient_limits(ext.envelope_value, t, +1, dr, schedule, "g")
    l, _ = quotient_limits(ext.envelope_value, t, -1, dl, schedule, "g")
    return float(r[0]), float(l[0])


def is_bj_extension_criterion(ext: ConvexExtension, tol: float = TOL_VERDICT,
                              sup_tol: float | None = None,
                              schedule: DerivSchedule = DEFAULT_SCHEDULE) -> WitnessReport:
    """Derivative test over the sup-attaining set ``M_f``.

    The extension is BJ iff some ``x`` in ``M_f`` has right derivative
    ``>= -tol`` at 0 and some ``y`` in ``M_f`` has left derivative ``<= tol``.
    The reported witnesses are the extremal ones (largest right derivative,
    smallest left derivative; lowest index on ties). ``witness`` is the first
    point passing both tests, if any.
    """
    M = sup_attaining_set(ext.base, sup_tol)
    idx = np.array(M.indices, dtype=np.int64)
    r, l, _, _ = point_derivatives(ext, idx, 0.0, schedule)
    kr, kl = int(np.argmax(r)), int(np.argmin(l))
    right = (int(idx[kr]), float(r[kr])) if r[kr] >= -tol else None
    left = (int(idx[kl]), float(l[kl])) if l[kl] <= tol else None
    both = np.flatnonzero((r >= -tol) & (l <= tol))
    witness = int(idx[both[0]]) if both.size else None
    return WitnessReport(right is not None and left is not None, witness, right, left, M)


def bhatia_semrl_witness(ext: ConvexExtension, t_grid=None, tol: float = TOL_VERDICT,
                         sup_tol: float | None = None,
                         schedule: DerivSchedule = DEFAULT_SCHEDULE) -> int | None:
    """A point ``x`` of ``M_f`` whose section is minimized at 0, or None.

    Two checks run on every candidate: the derivative test (right derivative
    ``>= -tol``, left ``<= tol``) and the grid test
    ``p(x, t) >= p(x, 0) - tol |t|``. For a convex section they are
    equivalent; a candidate must pass both, and disagreements are logged.
    """
    M = sup_attaining_set(ext.base, sup_tol)
    idx = np.array(M.indices, dtype=np.int64)
    r, l, _, _ = point_derivatives(ext, idx, 0.0, schedule)
    deriv_ok = (r >= -tol) & (l <= tol)
    ts = ext.t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    V = ext.grid_values(ts, idx)
    p0 = ext.rows(idx, 0.0)
    slack = tol * np.abs(ts)[None, :] + 8.0 * _EPS * (np.abs(V) + np.abs(p0)[:, None])
    value_ok = np.all(V - p0[:, None] >= -slack, axis=1)
    for k in np.flatnonzero(deriv_ok != value_ok):
        logger.warning("witness checks disagree at point %s: derivatives (%r, %r), grid test %s",
                       ext.space.label(int(idx[k])), r[k], l[k], bool(value_ok[k]))
    ok = np.flatnonzero(deriv_ok & value_ok)
    return int(idx[ok[0]]) if ok.size else None


# -- maximizing sequences (non-compact setting, via truncation) ----------------

@dataclass(frozen=True)
class MaximizingSequence:
    side: str
    indices: list[int]
    t_values: list[float]
    right_derivs: list[float]
    left_derivs: list[float]
    limit_estimate: float
    skipped: list[float]
    base_gap: float

    def tail(self, size: int | None = None):
        k = size or max(2, len(self.indices) // 4)
        return self.right_derivs[-k:], self.left_derivs[-k:]


def extract_maximizing_sequence(ext: ConvexExtension, side: str = "plus", n_terms: int = 24,
                                tol: float = 1e-6, t_first: float | None = None,
                                schedule: DerivSchedule = DEFAULT_SCHEDULE,
                                diff_tol: float = TOL_DERIV,
                                max_terms: int | None = None) -> MaximizingSequence:
    """Argmax points ``x_n`` of ``p(., t_n)`` along ``t_n = t_1 2^{-(n-1)} -> 0``.

    ``side='minus'`` uses negative ``t_n``. Times where the envelope is not
    numerically differentiable (one-sided derivatives differ by more than
    ``diff_tol``) are skipped. After ``n_terms`` candidates, both derivative
    lists must settle within ``tol`` of the envelope's one-sided derivative
    at 0 over the last ``max(2, n_terms // 4)`` accepted terms. Smooth
    sections converge only linearly in ``t_n``, so halving continues up to
    ``max_terms`` candidates (default ``3 * n_terms``) before
    :class:`ConvergenceError` is raised. Each tail term is allowed its
    rounding floor ``64 eps (1 + |p|) / |t_n|`` on top of ``tol``.
    """
    if side not in ("plus", "minus"):
        raise InputError("side must be 'plus' or 'minus'")
    if n_terms < 3:
        raise InputError("n_terms must be at least 3")
    max_terms = 3 * n_terms if max_terms is None else max(int(max_terms), n_terms)
    sign = 1.0 if side == "plus" else -1.0
    reach = ext.t_hi if side == "plus" else -ext.t_lo
    t1 = reach / 4.0 if t_first is None else abs(float(t_first))
    if not 0 < t1 < reach:
        raise InputError(f"t_first must lie in (0, {reach})")

    g_r0, g_l0 = envelope_derivatives(ext, 0.0, schedule)
    limit = g_r0 if side == "plus" else g_l0
    k = max(2, n_terms // 4)
    idxs, ts, rights, lefts, floors, skipped = [], [], [], [], [], []
    worst = np.inf
    for n in range(max_terms):
        t = sign * t1 * 2.0 ** (-n)
        cap = abs(t) / 2.0
        g_r, g_l = envelope_derivatives(ext, t, schedule, step_cap=cap)
        if abs(g_r - g_l) > diff_tol:
            skipped.append(t)
        else:
            _, arg = kernels.column_max_argmax(ext.grid_values(np.array([t])))
            x = int(arg[0])
            r, l, _, _ = point_derivatives(ext, [x], t, schedule, step_cap=cap)
            idxs.append(x)
            ts.append(t)
            rights.append(float(r[0]))
            lefts.append(float(l[0]))
            p = float(ext.rows(np.array([x]), t)[0])
            floors.append(64.0 * _EPS * (1.0 + abs(p)) / abs(t))
        if n + 1 < n_terms or len(idxs) < k:
            continue
        tail = np.array(rights[-k:] + lefts[-k:])
        allow = tol + np.array(floors[-k:] * 2)
        worst = float(np.max(np.abs(tail - limit) - allow)) + tol
        if worst <= tol:
            break
    if not idxs:
        raise NumericalError("every candidate t_n was rejected as a non-differentiability point")
    if worst > tol:
        raise ConvergenceError(
            f"section derivatives did not settle to {limit!r} within {tol} (off by {worst:.3g}) "
            f"after {max_terms} candidates"
        )
    base_gap = float(ext.base.sup - ext.base.values[idxs[-1]])
    return MaximizingSequence(side, idxs, ts, rights, lefts, limit, skipped, base_gap)


@dataclass(frozen=True)
class SufficiencyReport:
    pointwise_x: bool
    pointwise_y: bool
    limsup_right: float
    liminf_left: float
    verdict: bool

    def __bool__(self):
        return self.verdict


def nc_sufficiency_check(ext: ConvexExtension, xs: Sequence[int], ys: Sequence[int],
                         t_seq: Sequence[float], s_seq: Sequence[float], delta: float,
                         tol: float = 1e-6, sample_size: int = 41,
                         schedule: DerivSchedule = DEFAULT_SCHEDULE) -> SufficiencyReport:
    """Check the three hypotheses of the maximizing-sequence sufficiency test.

    1. the sections at the last ``x_n`` and ``y_n`` match ``g`` within ``tol``
       on a sample of ``(-delta, delta)``;
    2. the largest right derivative over the tail of ``(x_n, t_n)`` is ``>= -tol``;
    3. the smallest left derivative over the tail of ``(y_n, s_n)`` is ``<= tol``.

    Passing all three implies the BJ property. Failing says nothing.
    """
    if len(xs) != len(t_seq) or len(ys) != len(s_seq):
        raise InputError("sequence length mismatch")
    if len(xs) == 0 or len(ys) == 0:
        raise InputError("sequences must be non-empty")
    t_seq = np.asarray(t_seq, dtype=np.float64)
    s_seq = np.asarray(s_seq, dtype=np.float64)
    if np.any(t_seq <= 0) or np.any(np.diff(t_seq) >= 0):
        raise InputError("t_seq must be positive and strictly decreasing")
    if np.any(s_seq >= 0) or np.any(np.diff(s_seq) <= 0):
        raise InputError("s_seq must be negative and strictly increasing")
    if not 0 < delta <= min(-ext.t_lo, ext.t_hi):
        raise InputError("delta must be positive and inside the t-window")

    sample = np.linspace(-delta, delta, sample_size + 2)[1:-1]
    g = kernels.column_max_argmax(ext.grid_values(sample))[0]
    px = ext.grid_values(sample, [xs[-1]])[0]
    py = ext.grid_values(sample, [ys[-1]])[0]
    ok_x = bool(np.max(np.abs(px - g)) <= tol)
    ok_y = bool(np.max(np.abs(py - g)) <= tol)

    k_x = max(1, len(xs) // 2)
    k_y = max(1, len(ys) // 2)
    rights = [point_derivatives(ext, [x], float(t), schedule)[0][0]
              for x, t in zip(xs[-k_x:], t_seq[-k_x:])]
    lefts = [point_derivatives(ext, [y], float(s), schedule)[1][0]
             for y, s in zip(ys[-k_y:], s_seq[-k_y:])]
    limsup_r, liminf_l = float(max(rights)), float(min(lefts))
    verdict = ok_x and ok_y and limsup_r >= -tol and liminf_l <= tol
    return SufficiencyReport(ok_x, ok_y, limsup_r, liminf_l, verdict)
