"""Acceptance suite: one test per criterion, each reporting PASS/FAIL in the
terminal summary (see conftest)."""

import math
import time

import numpy as np
import pytest

from factories import (
    random_convex_curve,
    random_cx_pair,
    random_family,
    random_matrix_pair,
    random_space,
    tied_field,
)
from bjortho.convex1d import ConvexCurve, limsup_derivative_check, minimize_convex, right_derivative
from bjortho.cx_ortho import decide
from bjortho.extension import (
    Affine,
    bhatia_semrl_witness,
    build_extension,
    envelope,
    extract_maximizing_sequence,
    is_bj_extension_bruteforce,
    is_bj_extension_criterion,
    make_t_grid,
)
from bjortho.operators import MatrixPair, bhatia_semrl_euclidean, bj_operator_oracle
from bjortho.space import (
    ScalarField,
    density_perturbation,
    epsilon_connected,
    interval_grid,
    sup_attaining_set,
)

EPS = np.finfo(float).eps


def note(request, text):
    request.node.user_properties.append(("detail", text))


@pytest.mark.criterion(1, "kink family |t + x| on [-1, 1]")
def test_kink_end_to_end(request):
    start = time.perf_counter()
    sp = interval_grid(-1, 1, 201)
    ext = build_extension(sp, None, {"kind": "abs_affine", "a": "x", "b": 1.0})
    brute = is_bj_extension_bruteforce(ext)
    crit = is_bj_extension_criterion(ext)
    bs = bhatia_semrl_witness(ext)
    connected = epsilon_connected(sp, crit.sup_set.indices, 1.5 * sp.pitch)
    elapsed = time.perf_counter() - start
    note(request, f"d+={crit.right_witness[1]:.12g} d-={crit.left_witness[1]:.12g} {elapsed:.2f}s")
    assert brute.verdict and crit.verdict
    assert abs(crit.right_witness[1] - 1.0) <= 1e-6
    assert abs(crit.left_witness[1] + 1.0) <= 1e-6
    assert bs is None and not connected
    assert elapsed < 1.0


@pytest.mark.criterion(2, "truncated decay family 1 + t exp(-x) on [0, R]")
def test_truncated_decay(request):
    start = time.perf_counter()
    worst = []
    for R in (5.0, 10.0, 20.0):
        sp = interval_grid(0, R, 201)
        n = sp.n
        ext = build_extension(sp, ScalarField(sp, np.ones(n)), Affine(np.ones(n), np.exp(-sp.coords)))
        env = envelope(ext, make_t_grid(-1, 1, 401))
        err = np.abs(env.values - np.maximum(1.0, 1.0 + env.t_grid))
        # g(-1) = 1 - e^{-R} holds exactly, so allow the rounding of one addition
        assert np.all(err <= math.exp(-R) + 4 * EPS)
        assert bhatia_semrl_witness(ext) is None
        plus = extract_maximizing_sequence(ext, "plus")
        minus = extract_maximizing_sequence(ext, "minus")
        pr, pl = plus.tail()
        mr, ml = minus.tail()
        assert max(abs(v - 1.0) for v in pr + pl) <= 1e-6
        assert max(abs(v) for v in mr + ml) <= math.exp(-R) + 1e-6
        worst.append(f"R={R:g}:{err.max() - math.exp(-R):+.1e}")
    elapsed = time.perf_counter() - start
    note(request, f"envelope excess {' '.join(worst)} {elapsed:.2f}s")
    assert elapsed < 5.0


@pytest.mark.criterion(3, "criterion vs brute force on 500 random extensions")
def test_criterion_vs_bruteforce(request):
    start = time.perf_counter()
    seeds = range(1000, 1500)
    bad, verdicts = [], [0, 0]
    for seed in seeds:
        rng = np.random.default_rng(seed)
        sp = random_space(rng)
        fam, base = random_family(rng, sp)
        ext = build_extension(sp, base, fam)
        c = is_bj_extension_criterion(ext).verdict
        verdicts[c] += 1
        if c != is_bj_extension_bruteforce(ext).verdict:
            bad.append(seed)
    elapsed = time.perf_counter() - start
    note(request, f"seeds {seeds.start}..{seeds.stop - 1}, {verdicts[1]} BJ / {verdicts[0]} not, "
                  f"disagreeing seeds {bad}, {elapsed:.1f}s")
    assert bad == []
    assert elapsed < 60.0


@pytest.mark.criterion(4, "sign test vs oracle vs derivative criterion in C(X)")
def test_cx_three_way(request):
    start = time.perf_counter()
    unit, sym = interval_grid(0, 1, 101), interval_grid(-1, 1, 201)
    v = decide(ScalarField(unit, np.ones(101)), ScalarField(unit, 2 * unit.coords - 1))
    assert v.orthogonal and abs(v.oracle_min - 1.0) <= 1e-8
    v = decide(ScalarField(unit, np.ones(101)), ScalarField(unit, np.zeros(101)))
    assert v.orthogonal
    f = ScalarField(sym, sym.coords ** 3 + 0.2)
    assert not decide(f, f).orthogonal
    v = decide(ScalarField(sym, sym.coords), ScalarField(sym, np.ones(201)))
    assert v.orthogonal and v.methods_agree and v.criterion_agrees

    seeds = range(5000, 6000)
    bad, counts = [], [0, 0]
    for seed in seeds:
        f, g = random_cx_pair(np.random.default_rng(seed))
        assert np.abs(f.values).max() >= 0.1
        r = decide(f, g)
        counts[bool(r.orthogonal)] += 1
        if not (r.methods_agree and r.criterion_agrees):
            bad.append(seed)
    elapsed = time.perf_counter() - start
    note(request, f"seeds {seeds.start}..{seeds.stop - 1}, {counts[1]} orthogonal / {counts[0]} not, "
                  f"disagreeing seeds {bad}, {elapsed:.1f}s")
    assert bad == []
    assert elapsed < 60.0


@pytest.mark.criterion(5, "Euclidean single-vector witness vs norm oracle")
def test_euclidean_witness(request):
    start = time.perf_counter()
    x = bhatia_semrl_euclidean(MatrixPair(np.eye(2), np.diag([1.0, -1.0])))
    assert x is not None
    inner = abs(x @ np.diag([1.0, -1.0]) @ x)
    assert inner <= 1e-10

    seeds = range(9000, 9200)
    bad, counts = [], [0, 0]
    for seed in seeds:
        n = 2 + seed % 3
        A, B = random_matrix_pair(np.random.default_rng(seed), n)
        pair = MatrixPair(A, B)
        vmin, _ = bj_operator_oracle(pair)
        oracle_says = vmin >= np.linalg.norm(A, 2) - 1e-8
        counts[bool(oracle_says)] += 1
        if (bhatia_semrl_euclidean(pair) is not None) != oracle_says:
            bad.append(seed)
    elapsed = time.perf_counter() - start
    note(request, f"fixture |<Ax,Bx>|={inner:.1e}; seeds {seeds.start}..{seeds.stop - 1}, "
                  f"{counts[1]} orthogonal / {counts[0]} not, disagreeing seeds {bad}, {elapsed:.1f}s")
    assert bad == []
    assert elapsed < 120.0


@pytest.mark.criterion(6, "density perturbation isolates the chosen maximizer")
def test_density_perturbation(request):
    seeds = range(100)
    worst = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        sp = random_space(rng, 20, 200)
        f = ScalarField(sp, tied_field(rng, sp.n) * float(rng.uniform(0.1, 10)))
        M = sup_attaining_set(f, 0.0).indices
        x0 = int(rng.choice(M))
        y0 = int(rng.choice([i for i in range(sp.n) if i != x0]))
        eps = float(rng.uniform(1e-3, 2))
        fe = density_perturbation(f, x0, y0, eps)
        change = np.abs(f.values - fe.values)
        worst = max(worst, float(change.max() - eps))
        # f - (f - eps r) is rounded at the scale of |f|
        assert np.all(change <= eps + 4 * EPS * (np.abs(f.values) + eps))
        assert np.all(fe.values <= f.values)
        assert fe.sup == f.sup
        assert sup_attaining_set(fe, 0.0).indices == (x0,)
    note(request, f"seeds 0..99, max(|f - f_eps|) - eps = {worst:.1e}")


@pytest.mark.criterion(7, "smoothed kinks sqrt(t^2 + 1/n) and the limsup bound")
def test_smoothed_kinks(request):
    ns = [10 ** k for k in range(1, 7)]
    curves = [ConvexCurve(lambda t, n=n: math.sqrt(t * t + 1.0 / n), -1, 1) for n in ns]
    limit = ConvexCurve(abs, -1, 1)
    ders = [right_derivative(c, 0.0) for c in curves]
    assert all(d <= 1e-3 for n, d in zip(ns, ders) if n >= 10 ** 6)
    assert limsup_derivative_check(curves, limit, 0.0)
    margin = right_derivative(limit, 0.0) - max(ders[len(ders) // 2:])
    note(request, f"d+(n=1e6)={ders[-1]:.1e} margin={margin:.6f}")
    assert margin >= 0.99


def grid_argmin(fn, lo, hi, size=100_000):
    """Two-level dense grid: argmin, min and a slope bound from the coarse level."""
    ts = np.linspace(lo, hi, size)
    vals = fn(ts)
    lip = float(np.abs(np.diff(vals)).max() / (ts[1] - ts[0]))
    i = int(vals.argmin())
    ts = np.linspace(ts[max(i - 1, 0)], ts[min(i + 1, size - 1)], size)
    vals = fn(ts)
    i = int(vals.argmin())
    return float(ts[i]), float(vals[i]), lip


@pytest.mark.criterion(8, "golden-section minimization vs dense grid")
def test_minimize_vs_grid(request):
    worst_t = worst_v = 0.0
    for seed in range(100):
        fn, lo, hi = random_convex_curve(np.random.default_rng(seed))
        t, v = minimize_convex(ConvexCurve(lambda s: float(fn(s)), lo, hi), tol_t=1e-6)
        tg, vg, lip = grid_argmin(fn, lo, hi)
        worst_t = max(worst_t, abs(t - tg))
        worst_v = max(worst_v, v - vg)
        assert abs(t - tg) <= 1e-6
        # a t-error of tol_t costs at most lip * tol_t in value at a kink minimum
        assert v <= vg + lip * 1e-6
    note(request, f"seeds 0..99, max |t - t_grid|={worst_t:.1e}, max v - v_grid={worst_v:.1e}")
