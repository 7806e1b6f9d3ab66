"""File formats: JSON spaces, families and matrices, CSV fields, JSON reports
and CSV envelope dumps."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import InputError
from .extension import Envelope, Family, family_from_spec
from .operators import MatrixPair
from .space import DiscreteMetricSpace, ScalarField, from_points_1d


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def read_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _finite_matrix(raw, what: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be a rectangular array of numbers") from None
    if arr.ndim != 2:
        raise InputError(f"{what} must be a 2-D array, got {arr.ndim} dimension(s)")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        i, j = bad[0]
        raise InputError(f"{what}[{i}][{j}] is not finite")
    return arr


def space_from_json(obj, source: str = "<space>") -> DiscreteMetricSpace:
    if not isinstance(obj, dict):
        raise InputError(f"{source}: a space must be a JSON object")
    if "points_1d" in obj:
        metric = obj.get("metric", "absolute")
        if metric != "absolute":
            raise InputError(f"{source}: unsupported metric {metric!r} (only 'absolute')")
        xs = obj["points_1d"]
        if not isinstance(xs, list) or not all(isinstance(x, (int, float)) for x in xs):
            raise InputError(f"{source}: points_1d must be a list of numbers")
        labels = obj.get("points")
        if labels is not None and len(labels) != len(xs):
            raise InputError(f"{source}: {len(labels)} labels for {len(xs)} points")
        return from_points_1d(xs, labels)
    if "points" not in obj or "dist" not in obj:
        raise InputError(f"{source}: expected keys 'points' and 'dist', or 'points_1d'")
    points = obj["points"]
    if not isinstance(points, list):
        raise InputError(f"{source}: 'points' must be a list of labels")
    dist = _finite_matrix(obj["dist"], f"{source}: dist")
    n = len(points)
    if dist.shape != (n, n):
        raise InputError(f"{source}: dist has shape {dist.shape} for {n} points")
    if len({str(p) for p in points}) != n:
        raise InputError(f"{source}: point labels must be unique")
    return DiscreteMetricSpace(tuple(str(p) for p in points), dist)


def load_space(path) -> DiscreteMetricSpace:
    return space_from_json(read_json(path), str(path))


def parse_field_csv(text: str, space: DiscreteMetricSpace, source: str = "<field>") -> ScalarField:
    """One value per line in point order; blank lines and ``#`` comments are skipped."""
    values = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or not cells[0] or cells[0].startswith("#"):
            continue
        if len(cells) != 1:
            raise InputError(f"{source}:{lineno}: expected one value, got {len(cells)} fields")
        try:
            v = float(cells[0])
        except ValueError:
            raise InputError(f"{source}:{lineno}: cannot parse {cells[0]!r} as a number") from None
        if not math.isfinite(v):
            raise InputError(f"{source}:{lineno}: value {cells[0]!r} is not finite")
        values.append(v)
    if len(values) != space.n:
        raise InputError(f"{source}: {len(values)} values for a space of {space.n} points")
    return ScalarField(space, values)


def load_field(path, space: DiscreteMetricSpace) -> ScalarField:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_field_csv(text, space, str(path))


def load_family(path, space: DiscreteMetricSpace, base: ScalarField | None = None) -> Family:
    spec = read_json(path)
    try:
        return family_from_spec(spec, space, base)
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_matrices(path) -> MatrixPair:
    obj = read_json(path)
    if not isinstance(obj, dict) or "A" not in obj or "B" not in obj:
        raise InputError(f"{path}: expected an object with 'A' and 'B'")
    A = _finite_matrix(obj["A"], f"{path}: A")
    B = _finite_matrix(obj["B"], f"{path}: B")
    try:
        return MatrixPair(A, B, obj.get("norm", "euclidean"))
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- output ---------------------------------------------------------------------

def plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON types.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` or ``"nan"``.
    """
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, floats as shortest round-trip repr."""
    return json.dumps(plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report: dict, path=None):
    text = dumps_report(report)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_envelope_csv(env: Envelope, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "g", "argmax_index"])
        for t, g, k in env.rows():
            w.writerow([repr(t), repr(g), k])
