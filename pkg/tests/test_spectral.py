import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilddyn.core import LineUnion, SparseVector
from wilddyn.diagonal import DiagonalOperator, ModulusSchedule, build_schedule
from wilddyn.hajek_smith import HSLayout, build_hs_layout
from wilddyn.separating import make_forms
from wilddyn.spectral import (backward_shift_apply, backward_shift_demo, backward_shift_matrix, cycle_matrix,
                              diagonal_spectrum, eigenvalues, hs_block_spectrum, hs_truncation,
                              kernel_triviality_probe, match_distance, mv_partial_sums, operator_norm,
                              prajitura_perturbation, root_union_gap, roots_nest, spectral_radius)

ARC = LineUnion.real([(Fraction(0), Fraction(1, 16))])
FORMS = make_forms(ARC, 40)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_match_distance_against_permutations(a):
    rng = np.random.default_rng(len(a))
    b = np.array(a) + rng.normal(size=len(a)) * 0.1
    brute = min(max(abs(a[i] - b[j]) for i, j in enumerate(perm)) for perm in itertools.permutations(range(len(a))))
    # the assignment minimizes the sum, so its max can only be >= the bottleneck optimum
    assert match_distance(a, b) >= brute - 1e-12
    assert match_distance(a, a) == 0


@given(st.integers(1, 200))
def test_cycle_spectrum(H):
    assert hs_block_spectrum(H).passed
    C = cycle_matrix(H)
    np.testing.assert_array_equal(np.linalg.matrix_power(C, H), np.eye(H))


def test_roots_nest_and_gap():
    L = build_hs_layout(FORMS, 3)
    assert all(roots_nest(L.period(k), L.period(k + 1)) for k in range(1, 3))
    assert not roots_nest(6, 9)
    assert root_union_gap([3, 6, 12]) == pytest.approx(2 * math.pi / 12)
    assert root_union_gap([2, 3]) == pytest.approx(2 * math.pi / 3)


def test_diagonal_truncation_spectrum_exact():
    op = DiagonalOperator(build_schedule(FORMS, 8), FORMS)
    T = op.truncation(8)
    assert match_distance(eigenvalues(T.matrix), diagonal_spectrum(op.schedule, 8)) < 1e-10
    assert spectral_radius(T.matrix) == pytest.approx(1.0)


@given(st.integers(0, 50), st.sampled_from([1.0, 1.5, 3.0, math.inf]))
def test_operator_norm_brackets(seed, p):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 5))
    est = operator_norm(A, p)
    # Riesz-Thorin upper bound and random-vector lower bound
    n1, ninf = np.abs(A).sum(0).max(), np.abs(A).sum(1).max()
    up = ninf if p == math.inf else n1 ** (1 / p) * ninf ** (1 - 1 / p)
    X = rng.normal(size=(5, 400))
    low = max(np.linalg.norm(A @ x, ord=p) / np.linalg.norm(x, ord=p) for x in X.T)
    assert low * (1 - 1e-9) <= est <= up * (1 + 1e-9)


def test_operator_norm_p2_is_svd():
    A = np.arange(9.0).reshape(3, 3)
    assert operator_norm(A, 2) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0])


@given(st.floats(0.001, 0.5))
def test_prajitura_radius(eps):
    op = DiagonalOperator(build_schedule(FORMS, 6), FORMS)
    B = prajitura_perturbation(op.truncation(6), eps)
    assert spectral_radius(B.matrix) == pytest.approx(1 + 2 * eps, rel=1e-12)


def test_prajitura_needs_eigenvalue():
    op = DiagonalOperator(build_schedule(FORMS, 6), FORMS)
    with pytest.raises(ValueError):
        prajitura_perturbation(op.truncation(6), 0.1, lam=1j)


def test_mv_sums_of_a_power_bounded_matrix():
    op = DiagonalOperator(ModulusSchedule.from_moduli([1, 1, 2, 4, 12]), make_forms(ARC, 5))
    s = mv_partial_sums(op.truncation(5).matrix, 60)
    assert np.all(np.diff(s) > 0)
    # ||R^k|| grows at most linearly on a truncation, so the sums keep growing like log T or faster
    assert s[-1] > s[9] * 1.2


@given(st.sampled_from([1.0, 2.0, 3.0]), st.integers(1, 30))
def test_backward_shift_norms(p, t):
    B = backward_shift_matrix(t + 1, p)
    Bt = np.linalg.matrix_power(B, t)
    col = Bt[:, t]
    assert np.linalg.norm(col, ord=p) == pytest.approx((t + 1) ** (1 / p))
    x = SparseVector({t + 1: 1.0})
    y = backward_shift_apply(x, t, p)
    assert y[1] == pytest.approx(col[0])


def test_backward_shift_demo():
    rep = backward_shift_demo(2.0, 30)
    assert rep.passed
    assert rep.partial_sums[-1] > rep.partial_sums[9]


def test_kernel_probe():
    single = DiagonalOperator(build_schedule(make_forms(LineUnion.real(lines=[0]), 10), 6),
                              make_forms(LineUnion.real(lines=[0]), 10))
    assert kernel_triviality_probe(single).degenerate
    op = DiagonalOperator(build_schedule(FORMS, 8), FORMS)
    pr = kernel_triviality_probe(op)
    assert not pr.degenerate
    # the forced entry |x_k| is at least the 15|f_k|/pi type lower bound's order
    assert all(r[2] >= 0 for r in pr.rows)


def test_hs_truncation_shape():
    L = HSLayout.from_a([1, 3, 7])
    T = hs_truncation(L, make_forms(ARC, 4), 2)
    assert T.matrix.shape == (58, 58)
    assert spectral_radius(T.matrix) == pytest.approx(1.0)
