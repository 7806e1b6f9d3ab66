"""Finite metric spaces, scalar fields on them, sup-attaining sets,
epsilon-connectivity and the density perturbation that isolates one maximizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import InputError

TOL_METRIC = 1e-9


class SpaceError(InputError):
    pass


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def format_coordinate(x: float) -> str:
    """Signed label for a 1-D coordinate, e.g. ``+1.0`` or ``-0.25``."""
    return f"{float(f'{x:.12g}') + 0.0:+}"


@dataclass(frozen=True, eq=False)
class DiscreteMetricSpace:
    """A finite metric space given by point labels and a distance matrix.

    Construction only checks shapes and finiteness; the metric axioms are
    checked by :func:`validate_space`.
    """

    points: tuple
    dist: np.ndarray
    coords: np.ndarray | None = None
    grid_pitch: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        dist = _readonly(self.dist)
        n = len(self.points)
        if n < 1:
            raise SpaceError("a space needs at least one point")
        if dist.shape != (n, n):
            raise SpaceError(f"distance matrix has shape {dist.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(dist)):
            raise SpaceError("distance matrix contains NaN or Inf")
        object.__setattr__(self, "dist", dist)
        if self.coords is not None:
            object.__setattr__(self, "coords", _readonly(self.coords))

    def __len__(self):
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    def label(self, i: int) -> str:
        return str(self.points[i])

    def index_of(self, key) -> int:
        """Index of a point given by label, or by integer index."""
        key_s = str(key)
        for i, p in enumerate(self.points):
            if str(p) == key_s:
                return i
        try:
            i = int(key_s)
        except ValueError:
            raise SpaceError(f"unknown point {key!r}") from None
        if not 0 <= i < self.n:
            raise SpaceError(f"point index {i} out of range")
        return i

    @cached_property
    def pitch(self) -> float:
        """Discretization pitch: the grid spacing when known, otherwise the
        largest nearest-neighbour distance."""
        if self.grid_pitch is not None:
            return float(self.grid_pitch)
        if self.n == 1:
            return 0.0
        d = self.dist.copy()
        np.fill_diagonal(d, np.inf)
        return float(d.min(axis=1).max())


@dataclass(frozen=True, eq=False)
class ScalarField:
    space: DiscreteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(np.ravel(self.values))
        if values.size != self.space.n:
            raise InputError(f"field has {values.size} values for {self.space.n} points")
        if not np.all(np.isfinite(values)):
            raise InputError("field values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def sup(self) -> float:
        return float(self.values.max())

    @property
    def norm(self) -> float:
        return float(np.abs(self.values).max())

    @property
    def spread(self) -> float:
        return float(self.values.max() - self.values.min())

    def abs(self) -> "ScalarField":
        return ScalarField(self.space, np.abs(self.values))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.space, values)


@dataclass(frozen=True)
class SupSet:
    indices: tuple[int, ...]
    sup_value: float
    tol_used: float

    def __contains__(self, i):
        return i in self.indices

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple[int, ...]
    detail: str


# -- constructors -------------------------------------------------------------

def from_points_1d(xs: Sequence[float], labels: Sequence | None = None) -> DiscreteMetricSpace:
    """Points on the real line with ``|x - y|`` distances."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1 or xs.size == 0:
        raise SpaceError("points_1d must be a non-empty list of numbers")
    if not np.all(np.isfinite(xs)):
        raise SpaceError("points_1d contains NaN or Inf")
    if labels is None:
        labels = [format_coordinate(x) for x in xs]
    pitch = None
    if xs.size > 1:
        gaps = np.diff(np.sort(xs))
        pitch = float(gaps.max())
    return DiscreteMetricSpace(tuple(labels), np.abs(xs[:, None] - xs[None, :]), coords=xs,
                               grid_pitch=pitch)


def interval_grid(lo: float, hi: float, n: int) -> DiscreteMetricSpace:
    """``n`` equally spaced points on ``[lo, hi]``."""
    if n < 1:
        raise SpaceError("need at least one grid point")
    return from_points_1d(np.linspace(lo, hi, n))


def circle(n: int, radius: float = 1.0) -> DiscreteMetricSpace:
    """``n`` equally spaced points on a circle with arc-length distance."""
    theta = 2.0 * np.pi * np.arange(n) / n
    diff = np.abs(theta[:, None] - theta[None, :])
    arc = radius * np.minimum(diff, 2.0 * np.pi - diff)
    return DiscreteMetricSpace(tuple(f"c{i}" for i in range(n)), arc,
                               grid_pitch=2.0 * np.pi * radius / n)


def euclidean_cloud(xyz) -> DiscreteMetricSpace:
    """Points in R^d with Euclidean distances."""
    xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
    dist = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)
    return DiscreteMetricSpace(tuple(f"p{i}" for i in range(len(xyz))), dist, coords=None)


def shortest_path_closure(weights) -> np.ndarray:
    """Floyd-Warshall closure of a symmetric non-negative weight matrix.

    ``inf`` marks a missing edge. The result satisfies the triangle inequality.
    """
    d = np.array(weights, dtype=np.float64)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    if not np.all(np.isfinite(d)):
        raise SpaceError("weight graph is disconnected")
    return d


def random_metric(n: int, rng: np.random.Generator, density: float = 0.3) -> DiscreteMetricSpace:
    """Random finite metric: random positive edge weights closed under shortest paths."""
    w = rng.uniform(0.1, 1.0, size=(n, n))
    mask = rng.random((n, n)) < density
    mask |= mask.T
    idx = np.arange(n - 1)
    mask[idx, idx + 1] = mask[idx + 1, idx] = True  # keep a spanning path
    w = np.where(mask, w, np.inf)
    return DiscreteMetricSpace(tuple(f"m{i}" for i in range(n)), shortest_path_closure(w))


# -- operations ---------------------------------------------------------------

def validate_space(space: DiscreteMetricSpace, tol_metric: float = TOL_METRIC,
                   max_reports: int = 10_000) -> list[Violation]:
    """Metric-axiom violations of ``space``; an empty list means valid.

    Triangle violations are reported once per unordered pair ``{i, j}`` and
    intermediate point ``k``.
    """
    d = space.dist
    n = space.n
    r = lambda i, j: repr(float(d[i, j]))
    if d.shape != (n, n):
        raise SpaceError(f"distance matrix has shape {d.shape}, expected ({n}, {n})")
    out: list[Violation] = []
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol_metric):
        out.append(Violation("diagonal", (int(i),), f"dist[{i}][{i}] = {r(i, i)}"))
    for i, j in zip(*np.nonzero(d < -tol_metric)):
        out.append(Violation("negative", (int(i), int(j)), f"dist[{i}][{j}] = {r(i, j)}"))
    asym = np.abs(d - d.T) > tol_metric
    for i, j in zip(*np.nonzero(np.triu(asym, 1))):
        out.append(Violation("symmetry", (int(i), int(j)),
                             f"dist[{i}][{j}] = {r(i, j)} != dist[{j}][{i}] = {r(j, i)}"))
    for i, j, k in kernels.triangle_violations(d, tol_metric, max_reports):
        i, j, k = int(i), int(j), int(k)
        out.append(Violation(
            "triangle", (i, j, k),
            f"dist[{i}][{j}] = {r(i, j)} > dist[{i}][{k}] + dist[{k}][{j}] = {float(d[i, k] + d[k, j])!r}",
        ))
    return out


def default_sup_tol(sup_value: float) -> float:
    return 1e-9 * (1.0 + abs(sup_value))


def sup_attaining_set(field: ScalarField, tol: float | None = None) -> SupSet:
    """Indices whose value is within ``tol`` of the maximum.

    ``tol=None`` uses ``1e-9 * (1 + |sup|)``.
    """
    sup = field.sup
    if tol is None:
        tol = default_sup_tol(sup)
    if tol < 0:
        raise InputError("tol must be non-negative")
    idx = np.flatnonzero(field.values >= sup - tol)
    return SupSet(tuple(int(i) for i in idx), sup, float(tol))


def epsilon_connected(space: DiscreteMetricSpace, subset: Iterable[int], eps: float | None = None) -> bool:
    """Whether ``subset`` is connected in the graph with edges ``dist <= eps``.

    ``eps=None`` uses 1.5 times the space's pitch.
    """
    subset = sorted(set(int(i) for i in subset))
    if not subset:
        raise InputError("subset must be non-empty")
    if eps is None:
        eps = 1.5 * space.pitch
    if not eps > 0 and len(subset) > 1:
        raise InputError("eps must be positive")
    return kernels.count_components(space.dist, subset, eps) == 1


def density_perturbation(field: ScalarField, x0: int, y0: int, eps: float) -> ScalarField:
    """``f(x) - eps * d(x, x0) / (d(x, x0) + d(x, y0))``.

    ``x0`` must be an exact maximizer of ``field`` and every other point must
    be at positive distance from it; the result then attains its supremum
    only at ``x0`` and never exceeds ``field``.
    """
    space = field.space
    n = space.n
    if not (0 <= x0 < n and 0 <= y0 < n):
        raise InputError("x0/y0 out of range")
    if x0 == y0:
        raise InputError("x0 and y0 must differ")
    if eps < 0:
        raise InputError("eps must be non-negative")
    if field.values[x0] != field.sup:
        raise InputError(f"x0={x0} is not a maximizer of the field")
    d0 = space.dist[:, x0]
    d1 = space.dist[:, y0]
    others = np.arange(n) != x0
    if np.any(d0[others] <= 0):
        raise InputError("a point other than x0 sits at zero distance from x0")
    if eps == 0:
        return field.with_values(field.values.copy())
    bump = eps * d0 / (d0 + d1)
    bump[x0] = 0.0
    return field.with_values(field.values - bump)
