import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilddyn.core import Field, LineUnion, SparseVector
from wilddyn.diagonal import ModulusSchedule, build_schedule, lambda_kt, orbit_norm
from wilddyn.rotation import RotationBlock, RotationOperator, apply_S_real, mu_kt, rotation_constant
from wilddyn.separating import make_forms

ARC = LineUnion.real([(Fraction(0), Fraction(1, 16))])
FORMS = make_forms(ARC, 40)


def _toy():
    return RotationOperator(ModulusSchedule.from_moduli([1, 2, 4, 12, 24]), make_forms(ARC, 5))


reals = st.lists(st.floats(-5, 5, allow_nan=False), min_size=10, max_size=10)


@given(reals, st.integers(0, 150))
def test_closed_form_matches_dense_powers(vals, t):
    op = _toy()
    x = SparseVector.from_dense(vals)
    A = op.truncation(5).matrix
    ref = np.linalg.matrix_power(A, t) @ np.array(vals)
    got = op.iterate_closed_form(x, t, trunc_K=5).materialize().to_dense(10)
    np.testing.assert_allclose(got, ref, atol=1e-9 * (1 + t))


@given(st.integers(2, 5), st.integers(0, 500))
def test_mu_is_cos_sin_sums(k, t):
    s = ModulusSchedule.from_moduli([1, 2, 4, 12, 24])
    th = math.pi / s.modulus(k)
    c, sn = mu_kt(k, t, s)
    assert c == pytest.approx(sum(math.cos(l * th) for l in range(t)), abs=1e-9)
    assert sn == pytest.approx(sum(math.sin(l * th) for l in range(t)), abs=1e-9)


@given(st.integers(2, 6))
def test_blocks_are_rotations(k):
    s = build_schedule(FORMS, 6)
    M = np.array(RotationBlock(k, s.modulus(k)).matrix())
    np.testing.assert_allclose(M @ M.T, np.eye(2), atol=1e-15)
    assert np.linalg.det(M) == pytest.approx(1.0)


@given(reals, st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]))
def test_rotation_lp_constant(vals, p):
    s = ModulusSchedule.from_moduli([1, 2, 4, 12, 24])
    x = SparseVector.from_dense(vals)
    y = apply_S_real(x, s, 1)
    from wilddyn.core import lp_norm
    assert lp_norm(y, p) <= rotation_constant(p) * lp_norm(x, p) * (1 + 1e-12) + 1e-300


def test_S_full_period_is_identity():
    s = ModulusSchedule.from_moduli([1, 2, 4, 12, 24])
    x = SparseVector.from_dense(np.arange(1.0, 11.0))
    y = apply_S_real(x, s, 2 * 24)
    np.testing.assert_allclose(y.to_dense(10), x.to_dense(10), atol=1e-12)


def test_real_operator_rejects_complex_input():
    op = _toy()
    with pytest.raises(ValueError):
        op.iterate_closed_form(SparseVector({1: 1j}, Field.COMPLEX), 3)
    with pytest.raises(ValueError):
        RotationOperator(build_schedule(FORMS, 4), make_forms(LineUnion.complex(slopes=[0j]), 5))


@given(st.floats(math.radians(100), math.radians(170)), st.integers(3, 6), st.floats(0, 1),
       st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_divergence_bound(phi, k, frac, p):
    op = RotationOperator(build_schedule(FORMS, 6), FORMS)
    s = op.schedule
    x = SparseVector({1: math.cos(phi), 2: math.sin(phi)})
    t = int(s.modulus(k - 1) + frac * (s.modulus(k) - s.modulus(k - 1)))
    iv = orbit_norm(op.iterate_closed_form(x, t, trunc_K=6), p, auto=False)
    assert iv.hi >= op.divergence_lower_bound(x, k, t, p) - 1e-9


def test_recurrence_on_F():
    op = RotationOperator(build_schedule(FORMS, 7), FORMS)
    x = SparseVector({1: 1.0})
    for est in op.recurrence_trace(x, 7, trunc_K=7):
        iv = orbit_norm(op.iterate_closed_form(x, est.t, trunc_K=7), 2.0, auto=False, distance_to_start=True)
        assert iv.lo <= est.bound + 1e-12
