import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilddyn.core import Field, LineUnion, PlanePoint, SparseVector, lp_norm
from wilddyn.diagonal import (DiagonalOperator, ModulusSchedule, build_schedule, geometric_sum, lambda_k,
                              lambda_kt, lambda_power, orbit_norm, recipe_tail_sum, unit_angle)
from wilddyn.separating import make_forms

ARC = LineUnion.real([(Fraction(0), Fraction(1, 16))])
FORMS = make_forms(ARC, 40)


def _brute_geo(m, t):
    return np.sum(np.exp(1j * np.pi * np.arange(t) / m)) if t else 0j


@given(st.integers(1, 300), st.integers(0, 2000))
def test_geometric_sum_matches_direct_sum(m, t):
    assert abs(geometric_sum(m, t) - _brute_geo(m, t)) <= 1e-9 * max(1, t)


@given(st.integers(1, 10 ** 30), st.integers(1, 50))
def test_geometric_sum_exact_zero_on_full_turns(m, q):
    assert geometric_sum(m, 2 * m * q) == 0


@given(st.integers(1, 10 ** 6), st.integers(0, 10 ** 9), st.integers(1, 10))
def test_unit_angle_reduces_exactly(den, num, q):
    assert unit_angle(num + q * den, den) == unit_angle(num, den)


def test_unit_angle_quarter_turns_exact():
    assert unit_angle(1, 4) == 1j and unit_angle(2, 4) == -1 and unit_angle(3, 4) == -1j


@given(st.integers(3, 7))
def test_recipe_schedule_growth(depth):
    s = build_schedule(FORMS, depth)
    assert s.modulus(1) == 1
    for k in range(2, depth):
        assert s.modulus(k + 1) % s.modulus(k) == 0
        assert s.ratio(k) >= 15
        assert s.ratio(k) >= (k + 2) ** 2 * FORMS.norm(k + 2)


def test_schedule_rejects_non_chain():
    with pytest.raises(ValueError):
        ModulusSchedule.from_moduli([1, 2, 3])
    with pytest.raises(ValueError):
        ModulusSchedule.from_moduli([2, 4])
    with pytest.raises(ValueError):
        ModulusSchedule.from_moduli([1, 1, 2, 4], strict=True)


def test_recipe_tail_sum_majorizes_deeper_terms():
    deep = build_schedule(FORMS, 9)
    for J in range(3, 7):
        actual = sum(FORMS.norm(k) / deep.modulus(k - 1) for k in range(J + 1, 10))
        assert recipe_tail_sum(deep, FORMS.norm, J) >= actual


def _toy():
    s = ModulusSchedule.from_moduli([1, 1, 2, 4, 12, 24])
    return DiagonalOperator(s, make_forms(ARC, 6))


xs = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=6, max_size=6)


@given(xs, st.integers(0, 120))
def test_closed_form_matches_dense_powers(vals, t):
    op = _toy()
    x = SparseVector.from_dense(vals, Field.COMPLEX)
    A = op.truncation(6).matrix
    ref = np.linalg.matrix_power(A, t) @ np.array(vals)
    got = op.iterate_closed_form(x, t, trunc_K=6).materialize().to_dense(6)
    np.testing.assert_allclose(got, ref, atol=1e-9 * (1 + t))


@given(xs)
def test_apply_R_is_one_step(vals):
    op = _toy()
    x = SparseVector.from_dense(vals, Field.COMPLEX)
    y, tail = op.apply_R(x, trunc_K=6)
    np.testing.assert_allclose(y.to_dense(6), op.truncation(6).matrix @ np.array(vals), atol=1e-12)
    assert tail == 0.0


def test_truncation_spectrum_is_diagonal():
    op = _toy()
    A = op.truncation(6).matrix
    assert np.allclose(np.triu(A, 1), 0)
    np.testing.assert_allclose(np.diag(A), [lambda_k(k, op.schedule) for k in range(1, 7)])


@given(st.integers(3, 6), st.integers(0, 10 ** 6))
def test_lambda_power_matches_geometric_sum_identity(k, t):
    # (lambda - 1) lambda_{k,t} = lambda^t - 1
    s = build_schedule(FORMS, 6)
    lam = lambda_k(k, s)
    lhs = (lam - 1) * lambda_kt(k, t, s)
    assert abs(lhs - (lambda_power(k, t, s) - 1)) <= 1e-9


def _recipe_op(depth=6):
    return DiagonalOperator(build_schedule(FORMS, depth), FORMS)


@given(st.floats(math.radians(100), math.radians(170)), st.integers(4, 6), st.floats(0, 1))
def test_divergence_lower_bound_holds(phi, k, frac):
    op = _recipe_op()
    s = op.schedule
    x = SparseVector({1: math.cos(phi), 2: math.sin(phi)}, Field.COMPLEX)
    lo, hi = s.modulus(k - 1), s.modulus(k)
    t = int(lo + frac * (hi - lo))
    iv = orbit_norm(op.iterate_closed_form(x, t, trunc_K=6), 2.0, auto=False)
    assert iv.hi >= op.divergence_lower_bound(x, k, t) - 1e-9


def test_recurrence_estimate_bounds_true_distance():
    op = _recipe_op()
    x = SparseVector({1: 1.0, 2: 0.0}, Field.COMPLEX)
    for est in op.recurrence_trace(x, 6, trunc_K=6):
        iv = orbit_norm(op.iterate_closed_form(x, est.t, trunc_K=6), 2.0, auto=False, distance_to_start=True)
        assert iv.lo <= est.bound + 1e-12
        assert est.bound <= est.coarse_bound + 1e-12


def test_divergence_window_checked():
    op = _recipe_op()
    with pytest.raises(ValueError):
        op.divergence_lower_bound(SparseVector({2: 1.0}), 4, op.schedule.modulus(4) + 1)


def test_recurrence_needs_base_point_in_F():
    with pytest.raises(ValueError):
        _recipe_op().recurrence_estimate(SparseVector({2: 1.0}), 4)


def test_nuclear_bound_hits_epsilon():
    s = build_schedule(FORMS, 6, epsilon=0.05)
    op = DiagonalOperator(s, FORMS)
    assert op.nuclear_norm_bound() <= 0.05
