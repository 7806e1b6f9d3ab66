"""Birkhoff-James orthogonality in C(X) with the supremum norm.

``f`` is BJ-orthogonal to ``g`` when ``||f + lam g|| >= ||f||`` for every real
``lam``. On a finite space this is decided three ways:

* the sign test on the norm-attaining set ``M_|f|``: there must be points
  where ``f g >= 0`` and where ``f g <= 0``;
* the oracle: minimize the convex map ``lam -> ||f + lam g||`` directly;
* the extension criterion applied to ``p(x, t) = |f(x) + t g(x)|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex1d import minimize_convex_auto
from .errors import InputError
from .extension import AbsAffine, build_extension, is_bj_extension_criterion
from .space import ScalarField, SupSet, sup_attaining_set


@dataclass(frozen=True)
class OrthogonalityVerdict:
    orthogonal: bool
    pos_witness: int | None
    neg_witness: int | None
    oracle_min: float | None = None
    oracle_argmin: float | None = None
    methods_agree: bool | None = None
    criterion_agrees: bool | None = None
    norm_f: float = 0.0
    tol: float = 0.0
    sup_set: SupSet | None = None

    def __bool__(self):
        return self.orthogonal


def default_tol(f: ScalarField, g: ScalarField) -> float:
    return 1e-9 * (1.0 + f.norm * g.norm)


def _check_pair(f: ScalarField, g: ScalarField):
    if f.space is not g.space and not (
        f.space.n == g.space.n and np.array_equal(f.space.dist, g.space.dist)
    ):
        raise InputError("f and g must live on the same space")
    scale = max(f.norm, g.norm)
    if not f.norm > 1e-12 * (1.0 + scale):
        raise InputError("f is identically zero; orthogonality to it is excluded")


def sign_test(f: ScalarField, g: ScalarField, tol: float | None = None) -> OrthogonalityVerdict:
    """Sign test on ``M_|f|``.

    The positive witness maximizes ``f g`` over ``M_|f|`` and the negative one
    minimizes it (lowest index on ties); each counts if it clears ``tol``.
    """
    _check_pair(f, g)
    if tol is None:
        tol = default_tol(f, g)
    M = sup_attaining_set(f.abs())
    idx = np.array(M.indices, dtype=np.int64)
    prod = f.values[idx] * g.values[idx]
    kp, kn = int(np.argmax(prod)), int(np.argmin(prod))
    pos = int(idx[kp]) if prod[kp] >= -tol else None
    neg = int(idx[kn]) if prod[kn] <= tol else None
    return OrthogonalityVerdict(pos is not None and neg is not None, pos, neg,
                                norm_f=f.norm, tol=tol, sup_set=M)


def oracle(f: ScalarField, g: ScalarField, tol_t: float = 1e-10):
    """``(min, argmin)`` of ``lam -> ||f + lam g||_inf``."""
    _check_pair(f, g)
    fv, gv = f.values, g.values
    if not np.any(gv):
        return f.norm, 0.0
    lam, v = minimize_convex_auto(lambda s: float(np.abs(fv + s * gv).max()), tol_t=tol_t,
                                  label="||f + lam g||")
    return v, lam


def decide(f: ScalarField, g: ScalarField, tol: float | None = None,
           tol_t: float = 1e-10) -> OrthogonalityVerdict:
    """Sign test, oracle, and the extension criterion on ``|f + t g|``."""
    verdict = sign_test(f, g, tol)
    tol = verdict.tol
    vmin, lam = oracle(f, g, tol_t)
    oracle_says = vmin >= f.norm - tol
    ext = build_extension(f.space, f.abs(), AbsAffine(f.values, g.values), label="|f+tg| ")
    # on M_|f| the section derivatives are g sgn f = f g / ||f||
    crit = is_bj_extension_criterion(ext, tol=tol / f.norm)
    return OrthogonalityVerdict(
        orthogonal=verdict.orthogonal,
        pos_witness=verdict.pos_witness,
        neg_witness=verdict.neg_witness,
        oracle_min=vmin,
        oracle_argmin=lam,
        methods_agree=oracle_says == verdict.orthogonal,
        criterion_agrees=crit.verdict == verdict.orthogonal,
        norm_f=verdict.norm_f,
        tol=tol,
        sup_set=verdict.sup_set,
    )
