import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from factories import random_family, random_space
from bjortho.errors import ConvergenceError, InputError
from bjortho.extension import (
    AbsAffine,
    Affine,
    NormFamily,
    ShiftFunction,
    Shifted,
    Table,
    bhatia_semrl_witness,
    build_extension,
    envelope,
    envelope_derivatives,
    extract_maximizing_sequence,
    family_from_spec,
    is_bj_extension_bruteforce,
    is_bj_extension_criterion,
    make_t_grid,
    nc_sufficiency_check,
)
from bjortho.space import ScalarField, epsilon_connected, interval_grid, sup_attaining_set


@pytest.fixture(scope="module")
def kink():
    """``|t + x|`` over ``[-1, 1]``."""
    sp = interval_grid(-1, 1, 201)
    return build_extension(sp, None, {"kind": "abs_affine", "a": "x", "b": 1.0})


def decay(R, n=201):
    """``1 + t exp(-x)`` over ``[0, R]``."""
    sp = interval_grid(0, R, n)
    return build_extension(sp, ScalarField(sp, np.ones(n)), Affine(np.ones(n), np.exp(-sp.coords)))


def shifted(kind="abs", n=31, seed=0):
    sp = interval_grid(0, 1, n)
    f = np.round(np.random.default_rng(seed).uniform(-1, 1, n), 2)
    return build_extension(sp, ScalarField(sp, f), Shifted(f, ShiftFunction(kind)))


# -- construction -------------------------------------------------------------

def test_kink_is_valid(kink):
    assert np.array_equal(kink.base.values, np.abs(kink.space.coords))
    assert (kink.t_lo, kink.t_hi) == (-4.0, 4.0)


def test_shifted_is_valid():
    ext = shifted()
    assert ext.modulus is not None


def test_sign_mismatch_rejected():
    sp = interval_grid(-1, 1, 21)
    with pytest.raises(InputError, match="p\\(x, 0\\)"):
        build_extension(sp, ScalarField(sp, sp.coords), AbsAffine(sp.coords, np.ones(21)))


def test_table_family():
    sp = interval_grid(0, 1, 3)
    ts = [-1.0, 0.0, 1.0]
    ok = build_extension(sp, None, Table(ts, [[1, 0, 1], [2, 1, 1], [0, 0, 0]]))
    assert ok.envelope_value(0.5) == pytest.approx(1.0)
    assert ok.envelope_value(-0.5) == pytest.approx(1.5)
    with pytest.raises(InputError, match="slopes decrease"):
        build_extension(sp, None, Table(ts, [[0, 1, 0], [0, 0, 0], [0, 0, 0]]))


def test_nonconvex_section_rejected():
    sp = interval_grid(0, 1, 5)
    fam = NormFamily(np.ones((5, 1)), np.ones((5, 1)))
    ext = build_extension(sp, None, fam)
    assert ext.base.values == pytest.approx(np.ones(5))

    class Wavy(Affine):
        def grid_values(self, ts, idx=None):
            return np.cos(3 * np.asarray(ts))[None, :].repeat(5 if idx is None else len(idx), 0)

    with pytest.raises(InputError, match="not convex"):
        build_extension(sp, ScalarField(sp, np.ones(5)), Wavy(np.ones(5), np.zeros(5)))


def test_modulus_violation_rejected():
    sp = interval_grid(0, 1, 5)
    f = np.zeros(5)
    with pytest.raises(InputError, match="modulus"):
        build_extension(sp, ScalarField(sp, f), Affine(f, 3 * np.ones(5)), modulus=lambda t: t)
    build_extension(sp, ScalarField(sp, f), Affine(f, 3 * np.ones(5)), modulus=lambda t: 3 * t)


def test_family_spec_errors():
    sp = interval_grid(0, 1, 4)
    with pytest.raises(InputError):
        family_from_spec({"kind": "spline"}, sp)
    with pytest.raises(InputError):
        family_from_spec({"kind": "affine", "b": 1.0}, sp)
    with pytest.raises(InputError):
        family_from_spec({"kind": "affine", "f": [1, 2], "b": 1.0}, sp)
    with pytest.raises(InputError):
        family_from_spec({"kind": "shifted", "f": 0.0, "h": {"kind": "abs", "scale": -1}}, sp)
    fam = family_from_spec({"kind": "shifted", "f": "x", "h": "square"}, sp)
    assert fam.to_spec()["h"]["kind"] == "square"


def test_t_grid_contains_zero():
    ts = make_t_grid(-1.0, 3.0, 50)
    assert ts.size == 50 and 0.0 in ts
    assert np.all(np.diff(ts) > 0)
    with pytest.raises(InputError):
        make_t_grid(0.0, 1.0, 10)


# -- envelope -----------------------------------------------------------------

def test_envelope_kink(kink):
    env = envelope(kink, make_t_grid(-2, 2, 401))
    assert np.allclose(env.values, 1 + np.abs(env.t_grid), atol=1e-15)
    assert env.is_convex()


def test_envelope_decay():
    env = envelope(decay(10), make_t_grid(-1, 1, 401))
    defect = np.abs(env.values - np.maximum(1, 1 + env.t_grid)).max()
    assert defect <= math.exp(-10) + 1e-15


def test_envelope_shifted():
    ext = shifted()
    env = envelope(ext)
    assert np.allclose(env.values, ext.base.sup + np.abs(env.t_grid))


def test_envelope_ties_lowest_index():
    sp = interval_grid(0, 1, 4)
    ext = build_extension(sp, ScalarField(sp, np.ones(4)), Affine(np.ones(4), np.zeros(4)))
    assert set(envelope(ext).argmax) == {0}


def test_envelope_requires_zero(kink):
    with pytest.raises(InputError):
        envelope(kink, np.linspace(0.1, 1, 5))


# -- brute force and criterion ---------------------------------------------------

def test_bruteforce_examples(kink):
    assert is_bj_extension_bruteforce(kink)
    sp = interval_grid(0, 1, 11)
    f = np.linspace(0, 1, 11) ** 2
    down = build_extension(sp, ScalarField(sp, f), Affine(f, -np.ones(11)))
    res = is_bj_extension_bruteforce(down)
    assert not res and res.grid_min < res.g0
    assert is_bj_extension_bruteforce(shifted())


def test_criterion_kink(kink):
    rep = is_bj_extension_criterion(kink)
    assert rep.verdict
    assert rep.right_witness[0] == 200 and rep.right_witness[1] == pytest.approx(1.0, abs=1e-6)
    assert rep.left_witness[0] == 0 and rep.left_witness[1] == pytest.approx(-1.0, abs=1e-6)
    assert rep.witness is None


def test_criterion_slope_down():
    sp = interval_grid(0, 1, 11)
    f = np.zeros(11)
    rep = is_bj_extension_criterion(build_extension(sp, ScalarField(sp, f), Affine(f, -np.ones(11))))
    assert not rep.verdict and rep.right_witness is None and rep.left_witness is not None


def test_criterion_shifted():
    ext = shifted()
    rep = is_bj_extension_criterion(ext)
    assert rep.verdict and rep.witness == rep.right_witness[0] == rep.left_witness[0]


# -- single-point witnesses -----------------------------------------------------

def test_witness_examples(kink):
    assert bhatia_semrl_witness(kink) is None
    assert bhatia_semrl_witness(decay(20)) is None
    ext = shifted()
    w = bhatia_semrl_witness(ext)
    assert w in sup_attaining_set(ext.base)


def test_kink_sup_set_disconnected(kink):
    M = sup_attaining_set(kink.base)
    assert not epsilon_connected(kink.space, M.indices, 1.5 * kink.space.pitch)


# -- maximizing sequences and the sufficiency check -------------------------------

def test_sequence_decay_plus():
    seq = extract_maximizing_sequence(decay(20), "plus")
    assert set(seq.indices) == {0}
    assert np.allclose(seq.right_derivs, 1.0, atol=1e-6)
    assert seq.limit_estimate == pytest.approx(1.0, abs=1e-6)
    assert all(b < a for a, b in zip(seq.t_values, seq.t_values[1:]))


def test_sequence_decay_minus():
    ext = decay(20)
    seq = extract_maximizing_sequence(ext, "minus")
    assert seq.indices[0] == ext.space.n - 1
    # once |t| e^{-x} drops below one ulp of 1 the far points tie
    assert min(ext.space.coords[seq.indices]) >= 19.0
    assert max(abs(v) for v in seq.tail()[0] + seq.tail()[1]) <= math.exp(-20) + 1e-6


def test_sequence_smooth_minimum():
    seq = extract_maximizing_sequence(shifted("square"), "plus")
    assert abs(seq.limit_estimate) <= 1e-6
    # tail terms may carry their quotient rounding floor on top of 1e-6
    assert max(abs(v) for v in seq.tail()[0]) <= 1e-5
    assert abs(seq.right_derivs[-1]) <= 1e-6


def test_sequence_rejects_bad_args(kink):
    with pytest.raises(InputError):
        extract_maximizing_sequence(kink, "up")
    with pytest.raises(InputError):
        extract_maximizing_sequence(kink, "plus", n_terms=2)


def test_sequence_tail_must_settle():
    with pytest.raises(ConvergenceError):
        extract_maximizing_sequence(shifted("square"), "plus", n_terms=4, max_terms=4)


def test_sufficiency_decay_fails_but_bruteforce_holds():
    ext = decay(20)
    ts = [0.5 * 2.0**-k for k in range(10)]
    ys = [int(min(200, 20 + 18 * k)) for k in range(10)]
    rep = nc_sufficiency_check(ext, [0] * 10, ys, ts, [-t for t in ts], 0.5)
    assert not rep and not rep.pointwise_y
    # truncation makes g dip by e^{-R} |t| for t < 0
    assert not is_bj_extension_bruteforce(ext)
    assert is_bj_extension_bruteforce(ext, tol=math.exp(-20) * -ext.t_lo)


def test_sufficiency_shifted():
    ext = shifted()
    k = int(np.argmax(ext.base.values))
    ts = [0.5 * 2.0**-j for j in range(8)]
    assert nc_sufficiency_check(ext, [k] * 8, [k] * 8, ts, [-t for t in ts], 0.5)


def test_sufficiency_affine_witnesses():
    sp = interval_grid(0, 1, 5)
    f = np.array([1.0, 0.0, 1.0, -1.0, 1.0])
    b = np.array([0.0, 5.0, 0.0, 3.0, 0.0])  # flat on M_f, so sections there equal g near 0
    ext = build_extension(sp, ScalarField(sp, f), Affine(f, b))
    ts = [0.1 * 2.0**-j for j in range(8)]
    rep = nc_sufficiency_check(ext, [0] * 8, [4] * 8, ts, [-t for t in ts], 0.1)
    assert rep.verdict
    assert is_bj_extension_bruteforce(ext)


def test_sufficiency_validates_sequences(kink):
    with pytest.raises(InputError):
        nc_sufficiency_check(kink, [0, 1], [0], [0.1], [-0.1], 0.5)
    with pytest.raises(InputError):
        nc_sufficiency_check(kink, [0, 1], [0], [0.1, 0.2], [-0.1], 0.5)


def test_envelope_derivatives(kink):
    assert envelope_derivatives(kink, 0.0) == pytest.approx((1.0, -1.0), abs=1e-9)


# -- properties -----------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
quick = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@quick
@given(seeds)
def test_criterion_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 20, 120)
    fam, base = random_family(rng, sp)
    ext = build_extension(sp, base, fam)
    assert is_bj_extension_criterion(ext).verdict == is_bj_extension_bruteforce(ext).verdict


@quick
@given(seeds)
def test_witness_implies_bj_and_envelope_convex(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 20, 120)
    fam, base = random_family(rng, sp)
    ext = build_extension(sp, base, fam)
    assert envelope(ext).is_convex()
    if bhatia_semrl_witness(ext) is not None:
        assert is_bj_extension_bruteforce(ext)


@quick
@given(seeds, st.integers(3, 40), st.floats(0.5, 3.0))
def test_connected_sup_set_gives_witness(seed, width, lip):
    rng = np.random.default_rng(seed)
    n = 81
    sp = interval_grid(0, 1, n)
    start = int(rng.integers(0, n - width))
    f = np.where((np.arange(n) >= start) & (np.arange(n) < start + width), 1.0, 0.0)
    M = np.arange(start, start + width)
    c = float(rng.uniform(sp.coords[start], sp.coords[start + width - 1]))
    b = lip * (sp.coords - c)
    ext = build_extension(sp, ScalarField(sp, f), Affine(f, b))
    assert epsilon_connected(sp, M)
    bound = lip * sp.pitch
    w = bhatia_semrl_witness(ext, tol=bound)
    assert w is not None and abs(b[w]) <= bound


@quick
@given(seeds)
def test_maximizing_sequence_limits(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 20, 80)
    fam, base = random_family(rng, sp)
    ext = build_extension(sp, base, fam)
    if not is_bj_extension_bruteforce(ext):
        return
    plus = extract_maximizing_sequence(ext, "plus")
    minus = extract_maximizing_sequence(ext, "minus")
    assert plus.limit_estimate >= -1e-6
    assert minus.limit_estimate <= 1e-6
