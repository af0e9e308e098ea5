"""Cycle-block operator on a space with a symmetric norm (l^p here).

Span(e_n, n >= 3) is cut into blocks of sizes H_1, H_2, ...; S cycles each
block (e_{i,k} -> e_{i+1,k}, e_{H_k,k} -> e_{1,k}) and fixes e_1, e_2, and

    R x = S x + sum_k f_k(Px) v_k,    v_k = eps_k (1 on the first m_k, -1 on the next m_k).

The partial sums w_t = (I + ... + S^{t-1}) w have a piecewise linear profile
with O(1) pieces, so they are kept as segments and never expanded for big
blocks (H_4 already has 13 digits). Power sums over a piece go through
Euler-Maclaurin in mpmath.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .core import INF, Field, PlanePoint, SparseVector, check_p, classify_base_point, lp_norm, project_P
from .separating import SeparatingSequence

MAX_DIGITS = 10 ** 6
MATERIALIZE_CAP = 2_000_000
_EM_START = 64
_DPS = 40


@dataclass(frozen=True)
class Segment:
    """Values v0 + slope*j at local indices start + j, j < length."""

    start: int
    length: int
    v0: int
    slope: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    def value(self, i: int) -> int:
        return self.v0 + self.slope * (i - self.start)

    def __contains__(self, i: int) -> bool:
        return self.start <= i < self.stop


# --- the finite-dimensional profile ---------------------------------------

def _A(i: int, m: int, s: int) -> int:
    return max(0, min(i, m, s, s + m - i))


def _direct_profile(m: int, s: int) -> list[Segment]:
    """w_s with no wraparound (s + 2m - 1 <= H)."""
    g = lambda i: _A(i, m, s) - _A(i - m, m, s)
    bps = sorted({b for b in (0, m, s, s + m, 2 * m, s + 2 * m) if 0 <= b <= s + 2 * m})
    segs = []
    for b, b2 in zip(bps, bps[1:]):
        L = b2 - b
        v0 = g(b + 1)
        slope = (g(b2) - g(b)) // L
        if v0 == 0 and slope == 0:
            continue
        segs.append(Segment(b + 1, L, v0, slope))
    return segs


def _shift(segs: Sequence[Segment], s: int, H: int, sign: int) -> list[Segment]:
    out = []
    for sg in segs:
        start = (sg.start - 1 + s) % H + 1
        first = min(sg.length, H - start + 1)
        out.append(Segment(start, first, sign * sg.v0, sign * sg.slope))
        if first < sg.length:
            out.append(Segment(1, sg.length - first, sign * sg.value(sg.start + first), sign * sg.slope))
    return sorted(out, key=lambda sg: sg.start)


def w_profile(m: int, H: int, t: int) -> list[Segment]:
    """Segments of w_t on the cycle of length H (t reduced mod H exactly)."""
    if m < 1 or H < 4 * m:
        raise ValueError(f"need H >= 4m, got m = {m}, H = {H}")
    if t < 0:
        raise ValueError("t must be >= 0")
    s = t % H
    if s == 0:
        return []
    if s + 2 * m - 1 <= H:
        return _direct_profile(m, s)
    # w_H = 0 gives w_s = -S^s w_{H-s}, and H - s is short enough not to wrap
    return _shift(_direct_profile(m, H - s), s, H, -1)


def profile_value(segs: Sequence[Segment], i: int) -> int:
    for sg in segs:
        if i in sg:
            return sg.value(i)
    return 0


def cycle_w_t(m: int, H: int, t: int, p: float | None = None) -> SparseVector:
    """Materialized w_t (local 1-based indices). ``p`` is accepted for symmetry with the norm helpers."""
    segs = w_profile(m, H, t)
    if sum(sg.length for sg in segs) > MATERIALIZE_CAP:
        raise ValueError("profile too long to materialize")
    out = {}
    for sg in segs:
        for j in range(sg.length):
            out[sg.start + j] = float(sg.v0 + sg.slope * j)
    return SparseVector(out, Field.REAL)


# --- power sums -------------------------------------------------------------

def _falling(p: float, n: int):
    out = mpmath.mpf(1)
    for r in range(n):
        out *= (p - r)
    return out


def _sum_shifted_powers(x0, L: int, p: float):
    """sum_{j<L} (x0 + j)^p for x0 >= 0, Euler-Maclaurin past a few dozen terms."""
    x0 = mpmath.mpf(x0)
    total = mpmath.mpf(0)
    j = 0
    while j < L and x0 + j < _EM_START:
        total += (x0 + j) ** p
        j += 1
    if j == L:
        return total
    a, b = x0 + j, x0 + L - 1
    f = lambda x, n: _falling(p, n) * x ** (p - n)
    total += (b ** (p + 1) - a ** (p + 1)) / (p + 1) + (a ** p + b ** p) / 2
    for r in range(1, 6):
        total += mpmath.bernoulli(2 * r) / mpmath.factorial(2 * r) * (f(b, 2 * r - 1) - f(a, 2 * r - 1))
    return total


def _segment_power(v0: int, slope: int, L: int, p: float):
    """sum_{j<L} |v0 + slope j|^p as an mpf."""
    if L <= 0:
        return mpmath.mpf(0)
    if slope == 0:
        return L * mpmath.mpf(abs(v0)) ** p
    if slope < 0:
        v0, slope = v0 + slope * (L - 1), -slope
    # now increasing: split where the sign turns
    if v0 < 0:
        neg = min(L, (-v0 + slope - 1) // slope)  # terms with value < 0
        last = v0 + slope * (neg - 1)
        left = _segment_power(-last, slope, neg, p)
        return left + _segment_power(v0 + slope * neg, slope, L - neg, p)
    return mpmath.mpf(slope) ** p * _sum_shifted_powers(mpmath.mpf(v0) / slope, L, p)


def _segment_max(sg: Segment, exclude: Sequence[int]) -> int:
    """max |value| over the segment, skipping local indices in ``exclude``."""
    bad = {i for i in exclude if i in sg}
    best = 0
    # |v0 + slope j| is convex in j, so the max over any index set sits at its ends
    for direction in (1, -1):
        i = sg.start if direction == 1 else sg.stop - 1
        for _ in range(len(bad) + 1):
            if not sg.start <= i < sg.stop:
                break
            if i not in bad:
                best = max(best, abs(sg.value(i)))
                break
            i += direction
    return best


def profile_power(segs: Sequence[Segment], p: float):
    """sum |g_i|^p (mpf), or max |g_i| when p = inf."""
    if p == INF:
        return max((max(abs(sg.v0), abs(sg.value(sg.stop - 1))) for sg in segs), default=0)
    with mpmath.workdps(_DPS):
        return mpmath.fsum(_segment_power(sg.v0, sg.slope, sg.length, p) for sg in segs)


def profile_norm(segs: Sequence[Segment], p: float) -> float:
    p = check_p(p)
    if p == INF:
        return float(profile_power(segs, p))
    with mpmath.workdps(_DPS):
        return float(profile_power(segs, p) ** (1 / mpmath.mpf(p)))


def w_norm(m: int, H: int, t: int, p: float) -> float:
    return profile_norm(w_profile(m, H, t), p)


def plateau_norm(m: int, p: float) -> float:
    """||w_t|| for 2m <= t <= H - 2m: two tent bumps of height m."""
    if p == INF:
        return float(m)
    with mpmath.workdps(_DPS):
        s = 2 * _segment_power(1, 1, m - 1, p) + mpmath.mpf(m) ** p if m > 1 else mpmath.mpf(1)
        return float((2 * s) ** (1 / mpmath.mpf(p)))


def block_norm(segs: Sequence[Segment], coef: complex, extra: dict[int, complex], p: float) -> float:
    """|| coef * profile + extra || on one block, extra given on local indices.

    Uses norm^p = |coef|^p P - sum_E |coef g_i|^p + sum_E |coef g_i + y_i|^p
    so only the finitely many touched entries are visited.
    """
    ac = abs(coef)
    if not segs or ac == 0:
        return lp_norm(list(extra.values()), p) if extra else 0.0
    if p == INF:
        out = max((ac * _segment_max(sg, list(extra)) for sg in segs), default=0.0)
        for i, y in extra.items():
            out = max(out, abs(coef * profile_value(segs, i) + y))
        return float(out)
    with mpmath.workdps(_DPS):
        tot = mpmath.mpf(ac) ** p * profile_power(segs, p)
        for i, y in extra.items():
            g = profile_value(segs, i)
            tot += mpmath.mpf(abs(coef * g + y)) ** p - mpmath.mpf(ac * abs(g)) ** p
        return float(max(tot, mpmath.mpf(0)) ** (1 / mpmath.mpf(p)))


# --- exhaustive finite-dimensional check -------------------------------------

@dataclass
class BumpReport:
    m: int
    H: int
    p: float
    norms: np.ndarray
    lower_bound_violations: list[int] = field(default_factory=list)
    max_outside_window: list[int] = field(default_factory=list)
    rearrangement_mismatch: list[int] = field(default_factory=list)
    profile_mismatch: list[int] = field(default_factory=list)
    zero_at_H: bool = True
    periodic: bool = True

    @property
    def passed(self) -> bool:
        return (self.zero_at_H and self.periodic and not self.lower_bound_violations
                and not self.max_outside_window and not self.rearrangement_mismatch
                and not self.profile_mismatch)


def bump_norm_check(m: int, H: int, p: float) -> BumpReport:
    """Brute force over t = 1..2H by running sums of shifts, checked against the profiles."""
    if H < 4 * m:
        raise ValueError("need H >= 4m")
    if H > 10 ** 5:
        raise ValueError("H too large for exhaustion")
    p = check_p(p)
    w = np.zeros(H)
    w[:m], w[m:2 * m] = 1.0, -1.0
    base = lp_norm(w.tolist(), p)
    acc = np.zeros(H)
    seq = [acc.copy()]
    for t in range(1, 2 * H + 1):
        acc = acc + np.roll(w, t - 1)
        seq.append(acc.copy())
    norms = np.array([lp_norm(v.tolist(), p) for v in seq[:H + 1]])
    rep = BumpReport(m, H, p, norms)
    rep.zero_at_H = not np.any(seq[H])
    rep.periodic = all(np.array_equal(seq[H + s], seq[s]) for s in range(H + 1))
    lo, hi = 2 * m, H - 2 * m
    top = norms[1:].max()
    ref = np.sort(np.abs(seq[lo]))[::-1]
    for t in range(1, H + 1):
        prof = cycle_w_t(m, H, t).to_dense(H)
        if not np.array_equal(prof, seq[t]):
            rep.profile_mismatch.append(t)
        if lo <= t <= hi:
            if norms[t] < m / 2 * base * (1 - 1e-12):
                rep.lower_bound_violations.append(t)
            if not np.array_equal(np.sort(np.abs(seq[t]))[::-1], ref):
                rep.rearrangement_mismatch.append(t)
        elif norms[t] > top * (1 + 1e-12) or norms[t] > norms[lo] * (1 + 1e-12):
            rep.max_outside_window.append(t)
    return rep


# --- layout -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HSLayout:
    """a_1..a_{depth+1}; m_k = a_1...a_k, H_k = 2(m_k + m_{k+1}) for k <= depth."""

    a: tuple[int, ...]
    p: float = 2.0
    m: tuple[int, ...] = ()
    H: tuple[int, ...] = ()
    eps: tuple[float, ...] = ()
    offsets: tuple[int, ...] = ()

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        if len(a) < 2 or any(v < 1 for v in a):
            raise ValueError("need at least two positive a_k")
        for k in range(len(a) - 1):
            if (1 + a[k + 1]) % (1 + a[k]):
                raise ValueError(f"1 + a_{k + 1} does not divide 1 + a_{k + 2}")
        p = check_p(self.p)
        m = [a[0]]
        for v in a[1:]:
            m.append(m[-1] * v)
        H = [2 * (m[k] + m[k + 1]) for k in range(len(a) - 1)]
        for k in range(len(H) - 1):
            if H[k + 1] % H[k]:
                raise ValueError(f"H_{k + 1} does not divide H_{k + 2}")
        offsets = [3]
        for h in H[:-1]:
            offsets.append(offsets[-1] + h)
        # eps_k normalizes ||v_{k, 2 m_k}|| to 1
        eps = tuple(1.0 / w_norm(m[k], H[k], 2 * m[k], p) for k in range(len(H)))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "m", tuple(m))
        object.__setattr__(self, "H", tuple(H))
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "offsets", tuple(offsets))

    @classmethod
    def from_a(cls, a: Iterable[int], p: float = 2.0) -> "HSLayout":
        return cls(tuple(a), p)

    @property
    def depth(self) -> int:
        return len(self.H)

    def modulus(self, k: int) -> int:
        return self.m[k - 1]

    def period(self, k: int) -> int:
        if not 1 <= k <= self.depth:
            raise IndexError(f"block {k} outside 1..{self.depth}")
        return self.H[k - 1]

    def epsilon(self, k: int) -> float:
        return self.eps[k - 1]

    def offset(self, k: int) -> int:
        return self.offsets[k - 1]

    def locate(self, i: int) -> tuple[int, int]:
        """Global index i >= 3 -> (block k, local index)."""
        if i < 3:
            raise ValueError("indices 1, 2 belong to the plane")
        k = bisect.bisect_right(self.offsets, i)
        if k == self.depth and i >= self.offsets[-1] + self.H[-1]:
            raise ValueError(f"index {i} beyond the built layout")
        return k, i - self.offsets[k - 1] + 1

    def global_index(self, k: int, local: int) -> int:
        return self.offset(k) + local - 1

    def window(self, k: int) -> tuple[int, int]:
        """Plateau [2 m_k, H_k - 2 m_k]; its right end is 2 m_{k+1}."""
        return 2 * self.modulus(k), self.period(k) - 2 * self.modulus(k)

    def v_norm(self, k: int, t: int) -> float:
        return self.epsilon(k) * w_norm(self.modulus(k), self.period(k), t, self.p)


def _hs_multiplier(k: int, norm) -> int:
    return max(2, math.ceil(k ** 2 * norm(k)))


def build_hs_layout(forms: SeparatingSequence, depth: int, p: float = 2.0,
                    max_digits: int = MAX_DIGITS) -> HSLayout:
    """a_1 = 1, 1 + a_{k+1} = (1 + a_k) max(2, ceil((k+1)^2 ||f_{k+1}||))."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    a = [1]
    for k in range(1, depth + 1):
        a.append((1 + a[-1]) * _hs_multiplier(k + 1, forms.norm) - 1)
        if a[-1].bit_length() * depth * 0.30103 > max_digits:
            raise ValueError("layout exceeds the digit cap")
    return HSLayout(tuple(a), p)


def hs_tail_majorant(layout: HSLayout, K: int, t: int, r: float) -> float:
    """Bound on sum_{k>K} |f_k(Px)| ||v_{k,t}|| for recipe layouts, r = ||Px||.

    ||f_k|| / a_k <= 1/k^2, ||v_{k,t}|| <= 2t/m_k, and m_{k-1} >= 3^(k-1-K) m_K.
    """
    if r == 0 or t == 0:
        return 0.0
    return 3.0 * t * r / ((K + 1) ** 2 * layout.modulus(K))


# --- operator -----------------------------------------------------------------

def _split(x: SparseVector, layout: HSLayout) -> tuple[dict[int, complex], dict[int, dict[int, complex]]]:
    plane, blocks = {}, {}
    for i, v in x:
        if i <= 2:
            plane[i] = v
        else:
            k, loc = layout.locate(i)
            blocks.setdefault(k, {})[loc] = v
    return plane, blocks


def _shift_local(y: dict[int, complex], t: int, H: int) -> dict[int, complex]:
    return {(loc - 1 + t) % H + 1: v for loc, v in y.items()}


def apply_S_hs(x: SparseVector, layout: HSLayout, t: int = 1) -> SparseVector:
    """S^t x: each block cycled by t mod H_k, plane fixed."""
    plane, blocks = _split(x, layout)
    out = dict(plane)
    for k, y in blocks.items():
        for loc, v in _shift_local(y, t, layout.period(k)).items():
            out[layout.global_index(k, loc)] = v
    return SparseVector(out, x.field)


@dataclass(frozen=True)
class HSOperator:
    layout: HSLayout
    forms: SeparatingSequence

    @property
    def F(self):
        return self.forms.F

    @property
    def field(self) -> Field:
        return self.forms.F.field

    @property
    def depth(self) -> int:
        return min(self.layout.depth, len(self.forms))

    def coef(self, k: int, c: PlanePoint):
        return self.forms.form(k)(c)

    def bump(self, k: int) -> SparseVector:
        m, e = self.layout.modulus(k), self.layout.epsilon(k)
        if 2 * m > MATERIALIZE_CAP:
            raise ValueError(f"v_{k} has {2 * m} entries")
        off = self.layout.offset(k)
        return SparseVector({off + i: (e if i < m else -e) for i in range(2 * m)}, self.field)

    def _check_K(self, K: int, x: SparseVector | None = None) -> int:
        need = 1
        if x is not None and x.max_index >= 3:
            need = self.layout.locate(x.max_index)[0]
        K = max(K, need)
        if K > self.depth:
            raise ValueError(f"truncation {K} exceeds the layout/forms depth {self.depth}")
        return K

    def apply_R(self, x: SparseVector, trunc_blocks: int = 2) -> tuple[SparseVector, float]:
        K = self._check_K(trunc_blocks, x)
        c = project_P(x)
        out = apply_S_hs(x, self.layout)
        if c.c1 != 0 or c.c2 != 0:
            for k in range(1, K + 1):
                out = out + self.bump(k) * self.coef(k, c)
        return out, hs_tail_majorant(self.layout, K, 1, c.norm())

    def iterate(self, x: SparseVector, t: int, trunc_blocks: int = 4) -> "HSOrbit":
        if t < 0:
            raise ValueError("t must be >= 0")
        K = self._check_K(trunc_blocks, x)
        return HSOrbit(self, int(t), x, K)

    def divergence_lower_bound(self, x: SparseVector, t: int, p: float | None = None) -> tuple[int, float]:
        """(k, |f_k(Px)| - ||x||) with 2 m_k <= t <= 2 m_{k+1}."""
        p = self.layout.p if p is None else p
        k = plateau_block(self.layout, t)
        return k, abs(self.coef(k, project_P(x))) - lp_norm(x, p)


def plateau_block(layout: HSLayout, t: int) -> int:
    """k with 2 m_k <= t <= 2 m_{k+1}."""
    if t < 2 * layout.modulus(1):
        raise ValueError("t below 2 m_1")
    for k in range(1, layout.depth + 1):
        lo, hi = layout.window(k)
        if lo <= t <= hi:
            return k
    raise ValueError(f"t = {t} beyond the built layout")


@dataclass(frozen=True)
class HSInterval:
    lo: float
    hi: float
    trunc: int


@dataclass(frozen=True)
class HSOrbit:
    """R^t x with blocks <= trunc evaluated exactly (segment profiles), the rest majorized."""

    op: HSOperator
    t: int
    x0: SparseVector
    trunc: int

    def _block_norms(self, minus_x0: bool, p: float) -> list[float]:
        L = self.op.layout
        plane, blocks = _split(self.x0, L)
        c = project_P(self.x0)
        out = []
        if not minus_x0:
            out.append(lp_norm(list(plane.values()), p) if plane else 0.0)
        for k in range(1, self.trunc + 1):
            H = L.period(k)
            y = blocks.get(k, {})
            extra = _shift_local(y, self.t, H)
            if minus_x0:
                for loc, v in y.items():
                    extra[loc] = extra.get(loc, 0.0) - v
            segs = w_profile(L.modulus(k), H, self.t)
            out.append(block_norm(segs, self.op.coef(k, c) * L.epsilon(k), extra, p))
        return out

    def _combine(self, parts: list[float], p: float) -> float:
        return lp_norm(parts, p) if parts else 0.0

    def norm(self, p: float | None = None, distance_to_start: bool = False) -> HSInterval:
        """Blocks have disjoint supports, so the exact part is a lower bound."""
        p = self.op.layout.p if p is None else check_p(p)
        exact = self._combine(self._block_norms(distance_to_start, p), p)
        tail = hs_tail_majorant(self.op.layout, self.trunc, self.t, project_P(self.x0).norm())
        return HSInterval(exact, exact + tail, self.trunc)

    def materialize(self) -> SparseVector:
        L = self.op.layout
        c = project_P(self.x0)
        out = apply_S_hs(self.x0, L, self.t)
        if c.c1 == 0 and c.c2 == 0:
            return out
        for k in range(1, self.trunc + 1):
            w = cycle_w_t(L.modulus(k), L.period(k), self.t)
            scale = self.op.coef(k, c) * L.epsilon(k)
            off = L.offset(k)
            out = out + SparseVector({off + i - 1: scale * v for i, v in w}, self.op.field)
        return out


@dataclass(frozen=True)
class HSRecord:
    kind: str  # "divergence" or "recurrence"
    k: int
    t: int
    bound: float
    norm_lo: float
    norm_hi: float


@dataclass
class HSReport:
    predicted: str
    records: list[HSRecord]

    @property
    def bounds(self) -> list[float]:
        return [r.bound for r in self.records]


def hs_recurrence_bound(op: HSOperator, x: SparseVector, k: int, trunc_blocks: int, p: float) -> tuple[int, float]:
    """Three-part bound on ||R^t x - x|| at t = H_{k-1}: blocks < k return exactly."""
    L = op.layout
    t = L.period(k - 1)
    c = project_P(x)
    K = max(k, op._check_K(trunc_blocks, x))
    plane, blocks = _split(x, L)
    s_part = lp_norm(
        [v for kk, y in blocks.items() for v in _diff_shift(y, t, L.period(kk)).values()], p)
    middle = abs(op.coef(k, c)) * L.v_norm(k, t)
    rest = sum(abs(op.coef(j, c)) * L.v_norm(j, t) for j in range(k + 1, K + 1))
    return t, s_part + middle + rest + hs_tail_majorant(L, K, t, c.norm())


def _diff_shift(y: dict[int, complex], t: int, H: int) -> dict[int, complex]:
    out = _shift_local(y, t, H)
    for loc, v in y.items():
        out[loc] = out.get(loc, 0.0) - v
    return out


def hs_divergence_recurrence_report(x: SparseVector, layout: HSLayout, forms: SeparatingSequence,
                                    horizon: Sequence[int] | None = None, trunc_blocks: int = 4,
                                    p: float | None = None) -> HSReport:
    """A side: |f_k(Px)| - ||x|| at each t of the horizon with its plateau block k.
    B side: the three-part recurrence bound at t = H_{k-1}, k = 2..depth."""
    op = HSOperator(layout, forms)
    p = layout.p if p is None else p
    cls = classify_base_point(project_P(x), forms.F)
    records = []
    if not cls.in_f:
        if horizon is None:
            horizon = sorted({t for k in range(1, op.depth + 1) for t in layout.window(k)})
        for t in horizon:
            k, lb = op.divergence_lower_bound(x, t, p)
            iv = op.iterate(x, t, min(op.depth, max(k + 1, trunc_blocks))).norm(p)
            records.append(HSRecord("divergence", k, t, lb, iv.lo, iv.hi))
        return HSReport("A", records)
    for k in range(2, op.depth + 1):
        t, bound = hs_recurrence_bound(op, x, k, min(trunc_blocks, op.depth), p)
        iv = op.iterate(x, t, max(k, min(trunc_blocks, op.depth))).norm(p, distance_to_start=True)
        records.append(HSRecord("recurrence", k, t, bound, iv.lo, iv.hi))
    return HSReport("B", records)
