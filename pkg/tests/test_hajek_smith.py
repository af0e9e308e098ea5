import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilddyn.core import Field, LineUnion, PlanePoint, SparseVector, lp_norm
from wilddyn.hajek_smith import (HSLayout, HSOperator, apply_S_hs, build_hs_layout, bump_norm_check, cycle_w_t,
                                 hs_divergence_recurrence_report, hs_tail_majorant, plateau_norm, w_norm,
                                 w_profile)
from wilddyn.separating import make_forms
from wilddyn.spectral import hs_truncation

LINE = LineUnion.real(lines=[Fraction(0)])
ARC = LineUnion.real([(Fraction(0), Fraction(1, 16))])
ps = st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.5, math.inf])


def _brute_w(m, H, t):
    w = np.zeros(H)
    w[:m], w[m:2 * m] = 1, -1
    acc = np.zeros(H)
    for l in range(t):
        acc += np.roll(w, l)
    return acc


@given(st.integers(1, 6), st.integers(0, 10), st.integers(0, 80))
def test_profile_matches_running_sum(m, extra, t):
    H = 4 * m + extra
    np.testing.assert_array_equal(cycle_w_t(m, H, t).to_dense(H), _brute_w(m, H, t))


@pytest.mark.parametrize("m,H", [(1, 4), (2, 9), (3, 24), (5, 40), (7, 33)])
@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
def test_bump_exhaustive(m, H, p):
    assert bump_norm_check(m, H, p).passed


@given(st.integers(1, 40), st.integers(0, 60), st.integers(0, 500), ps)
def test_w_norm_matches_materialized(m, extra, t, p):
    H = 4 * m + extra
    ref = np.linalg.norm(_brute_w(m, H, t), ord=p) if t % H else 0.0
    assert w_norm(m, H, t, p) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_w_norm_large_m_against_integer_sum(p):
    # above the direct-summation threshold, so the Euler-Maclaurin path is exercised
    m, H = 200_000, 1_000_000
    for t in (3, 2 * m, 2 * m + 17, H - 5):
        v = np.abs(cycle_w_t(m, H, t).to_dense(H))
        ref = float(np.sum(v ** p) ** (1 / p))
        assert w_norm(m, H, t, p) == pytest.approx(ref, rel=1e-9)


@given(st.integers(10 ** 6, 10 ** 15), st.floats(0, 1), st.sampled_from([1.0, 2.0, 2.5, math.inf]))
def test_norm_constant_on_plateau(m, frac, p):
    H = 6 * m
    t = 2 * m + int(frac * (H - 4 * m))
    assert w_norm(m, H, t, p) == pytest.approx(plateau_norm(m, p), rel=1e-9)


def test_layout_identities():
    L = build_hs_layout(make_forms(ARC, 10), 5)
    assert L.a[0] == 1
    for k in range(1, L.depth + 1):
        assert L.period(k) == 2 * (L.modulus(k) + L.modulus(k + 1))
        assert L.v_norm(k, 2 * L.modulus(k)) == pytest.approx(1.0)
        if k < L.depth:
            assert L.period(k + 1) % L.period(k) == 0
            assert L.offset(k + 1) == L.offset(k) + L.period(k)


@given(st.integers(3, 10 ** 9))
def test_locate_inverts_global_index(i):
    L = build_hs_layout(make_forms(ARC, 10), 4)
    k, loc = L.locate(i)
    assert 1 <= loc <= L.period(k)
    assert L.global_index(k, loc) == i


def test_layout_rejects_bad_a():
    with pytest.raises(ValueError):
        HSLayout.from_a([1, 2, 5])


SMALL = HSLayout.from_a([1, 3, 7])  # m = 1, 3, 21; H = 8, 48


def _small_op():
    return HSOperator(SMALL, make_forms(ARC, 4))


xs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=58, max_size=58)


@given(xs)
def test_apply_R_matches_dense(vals):
    op = _small_op()
    A = hs_truncation(SMALL, op.forms, 2).matrix
    y, _ = op.apply_R(SparseVector.from_dense(vals), trunc_blocks=2)
    np.testing.assert_allclose(y.to_dense(58), A @ np.array(vals), atol=1e-12)


@given(xs, st.integers(0, 120), st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_orbit_matches_dense_powers(vals, t, p):
    op = _small_op()
    A = hs_truncation(SMALL, op.forms, 2).matrix
    ref = np.linalg.matrix_power(A, t) @ np.array(vals)
    orb = op.iterate(SparseVector.from_dense(vals), t, trunc_blocks=2)
    np.testing.assert_allclose(orb.materialize().to_dense(58), ref, atol=1e-9 * (1 + t))
    iv = orb.norm(p)
    assert iv.lo == pytest.approx(np.linalg.norm(ref, ord=p), rel=1e-9, abs=1e-9)
    d = orb.norm(p, distance_to_start=True)
    assert d.lo == pytest.approx(np.linalg.norm(ref - np.array(vals), ord=p), rel=1e-9, abs=1e-9)


def test_S_period():
    x = SparseVector.from_dense(np.arange(1.0, 59.0))
    np.testing.assert_array_equal(apply_S_hs(x, SMALL, 48).to_dense(58), x.to_dense(58))


def test_tail_majorant_dominates_deeper_blocks():
    forms = make_forms(ARC, 10)
    L = build_hs_layout(forms, 4)
    op = HSOperator(L, forms)
    c = PlanePoint(0.0, 1.0)
    for K in (1, 2, 3):
        for t in (1, 5, L.period(K)):
            actual = sum(abs(op.coef(k, c)) * L.v_norm(k, t) for k in range(K + 1, 5))
            assert hs_tail_majorant(L, K, t, c.norm()) >= actual


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_report_bounds_are_consistent(p):
    forms = make_forms(LINE, 8)
    L = build_hs_layout(forms, 3, p)
    off = hs_divergence_recurrence_report(SparseVector({1: 1.0, 2: 1.0}), L, forms)
    assert off.predicted == "A"
    for r in off.records:
        assert r.norm_hi >= r.bound
    on = hs_divergence_recurrence_report(SparseVector({1: 1.0, 5: 0.5}), L, forms)
    assert on.predicted == "B"
    for r in on.records:
        assert r.norm_lo <= r.bound + 1e-12


def test_divergence_grows():
    forms = make_forms(LINE, 8)
    L = build_hs_layout(forms, 4)
    rep = hs_divergence_recurrence_report(SparseVector({2: 1.0}), L, forms)
    b = rep.bounds
    # f_1 has norm 1: the block-1 bounds are |f_1(e_2)| - 1 = 0
    assert b[0] == pytest.approx(0.0, abs=1e-12) and b[1] == pytest.approx(0.0, abs=1e-12)
    assert b[-1] > b[2] > 0
