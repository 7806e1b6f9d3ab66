"""Vector norm tags: ``euclidean``, ``p:<p>`` and ``max``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Norm:
    kind: str  # "euclidean" | "p" | "max"
    p: float = 2.0

    @property
    def tag(self) -> str:
        if self.kind == "p":
            return f"p:{self.p:g}"
        return self.kind

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean" or (self.kind == "p" and self.p == 2.0)

    def __call__(self, x, axis=-1):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "euclidean":
            return np.linalg.norm(x, axis=axis)
        if self.kind == "max":
            return np.abs(x).max(axis=axis)
        return np.linalg.norm(x, ord=self.p, axis=axis)


def parse_norm(tag) -> Norm:
    if isinstance(tag, Norm):
        return tag
    s = str(tag).strip().lower()
    if s in ("euclidean", "l2", "2"):
        return Norm("euclidean")
    if s in ("max", "inf", "linf"):
        return Norm("max")
    if s.startswith("p:") or s.startswith("p_norm"):
        raw = s.split(":", 1)[1] if ":" in s else s[len("p_norm"):].strip("()")
        try:
            p = float(raw)
        except ValueError:
            raise InputError(f"bad p-norm tag {tag!r}") from None
        if not p >= 1 or not math.isfinite(p):
            raise InputError(f"p-norm needs 1 <= p < inf, got {p}")
        return Norm("p", p)
    raise InputError(f"unsupported norm tag {tag!r}")
