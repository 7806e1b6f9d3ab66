"""Command-line front end.

Every subcommand writes one JSON report (stdout or ``--output``) that embeds
the effective configuration. Exit codes: 0 when a verdict was computed, 1 for
bad input, 2 for a numerical breakdown.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .convex1d import TOL_CONVEX, TOL_DERIV, DerivSchedule
from .cx_ortho import decide
from .errors import InputError, NumericalError
from .extension import (
    T_GRID_SIZE,
    TOL_VERDICT,
    bhatia_semrl_witness,
    build_extension,
    envelope,
    extract_maximizing_sequence,
    is_bj_extension_bruteforce,
    is_bj_extension_criterion,
)
from .io import load_family, load_field, load_matrices, load_space, write_envelope_csv, write_report
from .kernels import BACKEND
from .operators import (
    bhatia_semrl_euclidean,
    bj_operator_criterion,
    bj_operator_oracle,
    operator_norm,
    sample_sphere,
)
from .space import TOL_METRIC, density_perturbation, epsilon_connected, sup_attaining_set, validate_space

COMMANDS = ("validate-space", "bj-extension", "bs-witness", "cx-ortho", "op-ortho",
            "density-perturb", "maximizing-seq")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

_PATHS = ("space", "family", "f", "g", "matrices")


@dataclass
class RunConfig:
    command: str
    space: str | None = None
    family: str | None = None
    f: str | None = None
    g: str | None = None
    matrices: str | None = None
    tol_metric: float = TOL_METRIC
    tol_deriv: float = TOL_DERIV
    tol_convex: float = TOL_CONVEX
    tol_verdict: float | None = None
    t_window: float | None = None
    grid_size: int = T_GRID_SIZE
    seed: int = 0
    sample_count: int | None = None
    x0: str | None = None
    y0: str | None = None
    eps: float | None = None
    side: str = "both"
    n_terms: int = 24
    output: str | None = None
    dump_envelope: str | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("tol_metric", "tol_deriv", "tol_convex", "tol_verdict", "t_window"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InputError(f"--{name.replace('_', '-')} must be positive, got {v}")
        if self.grid_size < 3:
            raise InputError(f"--grid-size must be at least 3, got {self.grid_size}")
        if self.n_terms < 3:
            raise InputError(f"--n-terms must be at least 3, got {self.n_terms}")
        if self.sample_count is not None and self.sample_count < 2:
            raise InputError("--sample-count must be at least 2")
        if self.eps is not None and self.eps < 0:
            raise InputError("--eps must be non-negative")
        if self.side not in ("plus", "minus", "both"):
            raise InputError("--side must be plus, minus or both")
        required = {
            "validate-space": ("space",),
            "bj-extension": ("space", "family"),
            "bs-witness": ("space", "family"),
            "cx-ortho": ("space", "f", "g"),
            "op-ortho": ("matrices",),
            "density-perturb": ("space", "f", "x0", "y0", "eps"),
            "maximizing-seq": ("space", "family"),
        }[self.command]
        for name in required:
            if getattr(self, name) is None:
                raise InputError(f"{self.command} needs --{name.replace('_', '-')}")
        for name in _PATHS:
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise InputError(f"--{name}: file not found: {p}")
        return self

    @property
    def schedule(self) -> DerivSchedule:
        return DerivSchedule(tol_deriv=self.tol_deriv, tol_convex=self.tol_convex)


# -- helpers --------------------------------------------------------------------

def _space(cfg: RunConfig):
    space = load_space(cfg.space)
    bad = validate_space(space, cfg.tol_metric, max_reports=20)
    if bad:
        details = "; ".join(v.detail for v in bad[:5])
        raise InputError(f"{cfg.space}: {len(bad)} metric violation(s): {details}")
    return space


def _extension(cfg: RunConfig, report: dict):
    space = _space(cfg)
    base = load_field(cfg.f, space) if cfg.f else None
    fam = load_family(cfg.family, space, base)
    ext = build_extension(space, base, fam, t_half_width=cfg.t_window,
                          tol_convex=cfg.tol_convex, grid_size=cfg.grid_size)
    report["config"]["t_window_effective"] = [ext.t_lo, ext.t_hi]
    report["family"] = fam.kind
    return space, ext


def _labels(space, idx):
    return [space.label(int(i)) for i in idx]


def _maybe_dump(cfg: RunConfig, ext):
    if cfg.dump_envelope:
        write_envelope_csv(envelope(ext, ext.t_grid(cfg.grid_size)), cfg.dump_envelope)


def _tol(cfg: RunConfig) -> float:
    return TOL_VERDICT if cfg.tol_verdict is None else cfg.tol_verdict


# -- commands -------------------------------------------------------------------

def cmd_validate_space(cfg: RunConfig, report: dict) -> int:
    space = load_space(cfg.space)
    bad = validate_space(space, cfg.tol_metric)
    report.update(valid=not bad, n_points=space.n,
                  violations=[{"kind": v.kind, "indices": list(v.indices), "detail": v.detail}
                              for v in bad])
    for v in bad[:10]:
        print(f"{cfg.space}: {v.kind} violation: {v.detail}", file=sys.stderr)
    return EXIT_INPUT if bad else EXIT_OK


def cmd_bj_extension(cfg: RunConfig, report: dict) -> int:
    space, ext = _extension(cfg, report)
    tol = _tol(cfg)
    ts = ext.t_grid(cfg.grid_size)
    brute = is_bj_extension_bruteforce(ext, ts, tol)
    crit = is_bj_extension_criterion(ext, tol, schedule=cfg.schedule)
    bs = bhatia_semrl_witness(ext, ts, tol, schedule=cfg.schedule)
    M = list(crit.sup_set.indices)
    report.update(
        bj_extension=crit.verdict,
        bruteforce=brute.verdict,
        methods_agree=brute.verdict == crit.verdict,
        criterion_witnesses=[
            space.label(crit.right_witness[0]) if crit.right_witness else None,
            space.label(crit.left_witness[0]) if crit.left_witness else None,
        ],
        right_derivative=crit.right_witness[1] if crit.right_witness else None,
        left_derivative=crit.left_witness[1] if crit.left_witness else None,
        bs_witness=space.label(bs) if bs is not None else None,
        sup_set=_labels(space, M),
        sup_value=crit.sup_set.sup_value,
        eps_connected=epsilon_connected(space, M),
        g0=brute.g0,
        g_min=min(brute.grid_min, brute.refined_min),
        g_argmin=brute.refined_t if brute.refined_min <= brute.grid_min else brute.grid_argmin_t,
    )
    _maybe_dump(cfg, ext)
    return EXIT_OK


def cmd_bs_witness(cfg: RunConfig, report: dict) -> int:
    space, ext = _extension(cfg, report)
    bs = bhatia_semrl_witness(ext, ext.t_grid(cfg.grid_size), _tol(cfg), schedule=cfg.schedule)
    M = sup_attaining_set(ext.base)
    report.update(
        bs_witness=space.label(bs) if bs is not None else None,
        bs_witness_index=bs,
        sup_set=_labels(space, M.indices),
        eps_connected=epsilon_connected(space, M.indices),
    )
    _maybe_dump(cfg, ext)
    return EXIT_OK


def cmd_cx_ortho(cfg: RunConfig, report: dict) -> int:
    space = _space(cfg)
    f = load_field(cfg.f, space)
    g = load_field(cfg.g, space)
    v = decide(f, g, cfg.tol_verdict)
    report["config"]["tol_verdict_effective"] = v.tol
    report.update(
        orthogonal=v.orthogonal,
        pos_witness=space.label(v.pos_witness) if v.pos_witness is not None else None,
        neg_witness=space.label(v.neg_witness) if v.neg_witness is not None else None,
        oracle_min=v.oracle_min,
        oracle_argmin=v.oracle_argmin,
        methods_agree=v.methods_agree,
        criterion_agrees=v.criterion_agrees,
        norm_f=v.norm_f,
        sup_set=_labels(space, v.sup_set.indices),
    )
    return EXIT_OK


def cmd_op_ortho(cfg: RunConfig, report: dict) -> int:
    pair = load_matrices(cfg.matrices)
    sample = sample_sphere(pair.n, pair.norm, cfg.sample_count, cfg.seed)
    report["config"]["sample_count_effective"] = sample.count
    report["config"]["norm"] = pair.norm.tag
    crit = bj_operator_criterion(pair, sample, _tol(cfg))
    vmin, lam = bj_operator_oracle(pair, sample=sample)
    a_norm = operator_norm(pair.A, pair.norm, sample)
    tol = _tol(cfg) if cfg.tol_verdict is not None else 1e-8
    oracle_says = vmin >= a_norm - tol * max(1.0, a_norm)
    witness = bhatia_semrl_euclidean(pair, tol) if pair.norm.is_euclidean else None
    if pair.norm.is_euclidean:
        orthogonal = witness is not None
    else:
        orthogonal = oracle_says
    space = sample.as_space
    report.update(
        orthogonal=orthogonal,
        pos_witness=space.label(crit.right_witness[0]) if crit.right_witness else None,
        neg_witness=space.label(crit.left_witness[0]) if crit.left_witness else None,
        pos_witness_vector=sample.points[crit.right_witness[0]] if crit.right_witness else None,
        neg_witness_vector=sample.points[crit.left_witness[0]] if crit.left_witness else None,
        oracle_min=vmin,
        oracle_argmin=lam,
        norm_a=a_norm,
        methods_agree=oracle_says == orthogonal,
        criterion_verdict=crit.verdict,
        criterion_agrees=crit.verdict == orthogonal,
        witness_vector=witness,
        approximation=crit.flags["approximate_norm"],
        sampling_resolution=crit.flags["sampling_resolution"],
    )
    return EXIT_OK


def cmd_density_perturb(cfg: RunConfig, report: dict) -> int:
    space = _space(cfg)
    f = load_field(cfg.f, space)
    x0, y0 = space.index_of(cfg.x0), space.index_of(cfg.y0)
    fe = density_perturbation(f, x0, y0, cfg.eps)
    diff = f.values - fe.values
    M = sup_attaining_set(fe, 0.0)
    report.update(
        values=fe.values,
        sup=fe.sup,
        sup_set=_labels(space, M.indices),
        max_change=float(np.max(np.abs(diff))),
        checks={
            "within_eps": bool(np.all(np.abs(diff) <= cfg.eps)),
            "below_f": bool(np.all(fe.values <= f.values)),
            "same_sup": fe.sup == f.sup,
            "unique_max": M.indices == (x0,),
        },
    )
    return EXIT_OK


def cmd_maximizing_seq(cfg: RunConfig, report: dict) -> int:
    space, ext = _extension(cfg, report)
    sides = ("plus", "minus") if cfg.side == "both" else (cfg.side,)
    out = {}
    for side in sides:
        seq = extract_maximizing_sequence(ext, side, cfg.n_terms, schedule=cfg.schedule,
                                          diff_tol=cfg.tol_deriv)
        out[side] = {
            "points": _labels(space, seq.indices),
            "t": seq.t_values,
            "right_derivatives": seq.right_derivs,
            "left_derivatives": seq.left_derivs,
            "limit_estimate": seq.limit_estimate,
            "skipped_t": seq.skipped,
            "base_gap": seq.base_gap,
        }
    report["sequences"] = out
    _maybe_dump(cfg, ext)
    return EXIT_OK


HANDLERS = {
    "validate-space": cmd_validate_space,
    "bj-extension": cmd_bj_extension,
    "bs-witness": cmd_bs_witness,
    "cx-ortho": cmd_cx_ortho,
    "op-ortho": cmd_op_ortho,
    "density-perturb": cmd_density_perturb,
    "maximizing-seq": cmd_maximizing_seq,
}


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bjortho", description="Birkhoff-James orthogonality and extension checks.",
        allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *inputs):
        for name in inputs:
            p.add_argument(f"--{name}", metavar="PATH")
        p.add_argument("--tol-metric", type=float, default=TOL_METRIC)
        p.add_argument("--tol-deriv", type=float, default=TOL_DERIV)
        p.add_argument("--tol-convex", type=float, default=TOL_CONVEX)
        p.add_argument("--tol-verdict", type=float, default=None)
        p.add_argument("--t-window", type=float, default=None, metavar="T",
                       help="half-width of the t-window (default 2 (1 + spread f))")
        p.add_argument("--grid-size", type=int, default=T_GRID_SIZE)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", metavar="PATH", help="report path (default stdout)")
        p.add_argument("--verbose", action="store_true")
        return p

    common(sub.add_parser("validate-space", help="check the metric axioms"), "space")
    p = common(sub.add_parser("bj-extension", help="decide whether an extension is BJ"),
               "space", "family", "f")
    p.add_argument("--dump-envelope", metavar="PATH")
    p = common(sub.add_parser("bs-witness", help="search for a single-point witness"),
               "space", "family", "f")
    p.add_argument("--dump-envelope", metavar="PATH")
    common(sub.add_parser("cx-ortho", help="orthogonality in C(X)"), "space", "f", "g")
    p = common(sub.add_parser("op-ortho", help="orthogonality of matrices"), "matrices")
    p.add_argument("--sample-count", type=int, default=None)
    p = common(sub.add_parser("density-perturb", help="isolate one maximizer"), "space", "f")
    p.add_argument("--x0", required=True)
    p.add_argument("--y0", required=True)
    p.add_argument("--eps", type=float, required=True)
    p = common(sub.add_parser("maximizing-seq", help="maximizing sequences along t -> 0"),
               "space", "family", "f")
    p.add_argument("--side", choices=("plus", "minus", "both"), default="both")
    p.add_argument("--n-terms", type=int, default=24)
    p.add_argument("--dump-envelope", metavar="PATH")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in known})


def run(cfg: RunConfig) -> int:
    cfg.validate()
    report = {"command": cfg.command, "version": __version__, "backend": BACKEND,
              "config": {k: v for k, v in asdict(cfg).items() if k != "output"}}
    code = HANDLERS[cfg.command](cfg, report)
    write_report(report, cfg.output)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return run(config_from_args(ns))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
