import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilddyn.core import (Field, LineUnion, PlanePoint, SparseVector, classify_base_point, lp_norm,
                          parse_number, project_P)

finite = st.floats(-1e3, 1e3, allow_nan=False)
ps = st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.0, math.inf])


@given(st.lists(finite, min_size=1, max_size=40), ps)
def test_lp_norm_matches_numpy(vals, p):
    ref = np.linalg.norm(np.array(vals), ord=p)
    assert lp_norm(SparseVector.from_dense(vals), p) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_lp_norm_zero_vector():
    assert lp_norm(SparseVector({}), 3.0) == 0.0


@given(st.dictionaries(st.integers(1, 50), finite, max_size=10),
       st.dictionaries(st.integers(1, 50), finite, max_size=10), finite)
def test_sparse_arithmetic_matches_dense(a, b, s):
    x, y = SparseVector(a), SparseVector(b)
    n = 50
    np.testing.assert_allclose((x + y).to_dense(n), x.to_dense(n) + y.to_dense(n))
    np.testing.assert_allclose((x - y).to_dense(n), x.to_dense(n) - y.to_dense(n))
    np.testing.assert_allclose((x * s).to_dense(n), s * x.to_dense(n))
    assert 0 not in (x + y).entries.values()


def test_sparse_rejects_bad_input():
    with pytest.raises(ValueError):
        SparseVector({0: 1.0})
    with pytest.raises(ValueError):
        SparseVector({1: 1j}, Field.REAL)


def test_project_P():
    x = SparseVector({1: 2.0, 2: -1.0, 9: 5.0})
    assert project_P(x) == PlanePoint(2.0, -1.0)


def _sampled_line_distance(c, theta, n=20001):
    # points s (cos, sin) on the line, s over a generous range
    s = np.linspace(-10, 10, n)
    pts = np.stack([s * math.cos(theta), s * math.sin(theta)], axis=1)
    return float(np.min(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])))


@given(st.floats(-3, 3), st.floats(-3, 3), st.fractions(0, Fraction(1, 2), max_denominator=64))
def test_real_line_distance_against_sampling(c1, c2, a):
    a = a % Fraction(1, 2)
    F = LineUnion.real(lines=[a])
    d = F.distance(PlanePoint(c1, c2))
    assert d == pytest.approx(_sampled_line_distance((c1, c2), 2 * math.pi * float(a)), abs=2e-3)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_arc_distance_is_min_over_arc_lines(c1, c2):
    F = LineUnion.real([(Fraction(0), Fraction(1, 16))])
    phis = np.linspace(0, 2 * math.pi / 16, 4001)
    ref = np.min(np.abs(c2 * np.cos(phis) - c1 * np.sin(phis)))
    step = phis[1] - phis[0]
    d = F.distance(PlanePoint(c1, c2))
    assert d <= ref + 1e-12
    assert d >= ref - math.hypot(c1, c2) * step


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 100))
def test_membership_scale_invariant(c1, c2, s):
    F = LineUnion.real([(Fraction(0), Fraction(1, 16))], [Fraction(1, 4)])
    c = PlanePoint(c1, c2)
    a, b = classify_base_point(c, F), classify_base_point(c.scaled(s), F)
    assert a.in_f == b.in_f
    assert b.distance == pytest.approx(s * a.distance, rel=1e-9, abs=1e-12)


def test_complex_disk_membership():
    F = LineUnion.complex(disks=[(0j, 0.5)])
    assert F.contains(PlanePoint(1.0, 0.3j))
    assert not F.contains(PlanePoint(1.0, 2.0))
    # distance to a far slope approaches the nearest boundary slope
    d = F.distance(PlanePoint(1.0, 2.0))
    s = np.exp(1j * np.linspace(0, 2 * np.pi, 20000)) * 0.5
    ref = np.min(np.abs(2.0 - s) / np.sqrt(1 + np.abs(s) ** 2))
    assert d == pytest.approx(ref, abs=1e-6)


def test_single_line():
    assert LineUnion.real(lines=[0]).is_single_line()
    assert not LineUnion.real([(0, Fraction(1, 16))]).is_single_line()
    assert LineUnion.complex(slopes=[1j]).is_single_line()


def test_parse_number():
    assert parse_number("1/3") == Fraction(1, 3)
    assert parse_number(2.5) == 2.5
    with pytest.raises(ValueError):
        parse_number("nope")
