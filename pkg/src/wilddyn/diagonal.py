"""The complex operator R = S + sum_{k>=3} (1/m_{k-1}) f_k(P.) e_k on l^p.

S is diagonal with lambda_1 = lambda_2 = 1 and lambda_k = exp(i pi / m_k),
where m_k | m_{k+1}. Iterates are evaluated in closed form,

    R^t x = S^t x + sum_k (lambda_{k,t} / m_{k-1}) f_k(Px) e_k,

with lambda_{k,t} the geometric sum of lambda_k^l over l < t. All angle
arithmetic reduces t modulo 2 m_k in exact integers first; the moduli have
hundreds of digits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Field, PlanePoint, SparseVector, classify_base_point, lp_norm, project_P
from .separating import SeparatingSequence

GROWTH = 15
TRUNC_DEFAULT = 64
TRUNC_CAP = 4096
MAX_DIGITS = 10 ** 6
_BIG = 2 ** 1000
_LOG_PI = math.log(math.pi)


def inv(m: int) -> float:
    """1/m as a float for arbitrarily large ints (underflows to 0.0)."""
    return 1 / m


def _digits(m: int) -> int:
    return int(m.bit_length() * math.log10(2)) + 1


def _log(n: int) -> float:
    return math.log(n)


def unit_angle(num: int, den: int) -> complex:
    """exp(2 pi i num/den) after exact reduction of num mod den."""
    r = num % den
    if r == 0:
        return 1 + 0j
    if 4 * r == den:
        return 1j
    if 2 * r == den:
        return -1 + 0j
    if 4 * r == 3 * den:
        return -1j
    a = 2.0 * math.pi * (r / den)
    return complex(math.cos(a), math.sin(a))


def geometric_sum(m: int, t: int, scale: int = 1) -> complex:
    """(sum_{l<t} exp(i pi l / m)) / scale, exactly 0 when 2m | t.

    Uses |sum| = |sin(pi t / 2m)| / sin(pi / 2m) with phase pi (t-1) / 2m,
    switching to logarithms when the moduli leave float range.
    """
    two_m = 2 * m
    tr = t % two_m
    if tr == 0:
        return 0j
    near = min(tr, two_m - tr)
    phase = math.pi * ((tr - 1) / two_m)
    if two_m < _BIG and scale < _BIG:
        mag = math.sin(math.pi * (near / two_m)) / math.sin(math.pi / two_m) / scale
    else:
        q = near / two_m
        if q > 1e-300:
            log_num = math.log(math.sin(math.pi * q))
        else:
            log_num = _LOG_PI + _log(near) - _log(two_m)
        y = math.pi / two_m
        log_den = _LOG_PI - _log(two_m) if y < 1e-8 else math.log(math.sin(y))
        log_mag = log_num - log_den - _log(scale)
        mag = math.exp(log_mag) if log_mag < 709 else math.inf
    return complex(mag * math.cos(phase), mag * math.sin(phase))


@dataclass(frozen=True, eq=False)
class ModulusSchedule:
    """Divisibility chain m_1 | m_2 | ... | m_depth (m_1 = 1).

    ``infinite`` schedules continue past ``depth`` by the build recipe, so
    the rest of the operator's tail can be majorized analytically; finite
    (toy) schedules define an operator whose tail stops at ``depth``.
    """

    m: tuple[int, ...]
    strict: bool = False
    infinite: bool = False
    alpha: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.m) < 2 or self.m[0] != 1:
            raise ValueError("schedule must start with the sentinel m_1 = 1")
        for k in range(1, len(self.m)):
            if self.m[k] <= 0 or self.m[k] % self.m[k - 1]:
                raise ValueError(f"m_{k} = {self.m[k - 1]} does not divide m_{k + 1} = {self.m[k]}")
        if self.strict:
            for k in range(4, self.depth + 1):
                if self.modulus(k) < GROWTH * self.modulus(k - 1):
                    raise ValueError(f"strict schedule needs m_{k} >= 15 m_{k - 1}")
            if self.alpha is not None:
                # k = 3 is skipped: m_1 = m_2 = 1 are sentinels
                for k in range(4, self.depth + 1):
                    term = float(k) ** self.alpha / self.ratio(k - 2)
                    if term > 1.0 / (k - 1) ** 2:
                        raise ValueError(f"summability majorant fails at k = {k}")

    @classmethod
    def from_moduli(cls, m, strict: bool = False) -> "ModulusSchedule":
        """Explicit (toy) schedule from [m_1, m_2, ...]."""
        return cls(tuple(int(v) for v in m), strict=strict)

    @property
    def depth(self) -> int:
        return len(self.m)

    def modulus(self, k: int) -> int:
        if not 1 <= k <= self.depth:
            raise IndexError(f"m_{k} outside the built depth {self.depth}")
        return self.m[k - 1]

    def ratio(self, k: int) -> int:
        """r_k = m_{k+1} / m_k."""
        return self.modulus(k + 1) // self.modulus(k)

    def cached(self, key, fn: Callable):
        try:
            return self._cache[key]
        except KeyError:
            val = self._cache[key] = fn()
            return val


def _recipe_ratio(k: int, norm: Callable[[int], float]) -> int:
    return max(GROWTH, math.ceil((k + 2) ** 2 * norm(k + 2)))


def _recipe_moduli(base: int, depth: int, norm, max_digits: int) -> tuple[int, ...]:
    m = [1, base]
    for k in range(2, depth):
        m.append(m[-1] * _recipe_ratio(k, norm))
        if _digits(m[-1]) > max_digits:
            raise ValueError(f"m_{k + 1} exceeds {max_digits} decimal digits")
    return tuple(m[:depth])


def build_schedule(forms: SeparatingSequence, depth: int, epsilon: float | None = None,
                   p: float = 2.0, max_digits: int = MAX_DIGITS) -> ModulusSchedule:
    """Recipe r_k = max(15, ceil((k+2)^2 ||f_{k+2}||)) with m_1 = 1.

    With ``epsilon`` the base m_2 is raised until nuclear_norm_bound <= epsilon.
    """
    if depth < 3:
        raise ValueError("depth must be >= 3")
    norm = forms.norm

    def make(base: int) -> ModulusSchedule:
        ms = _recipe_moduli(base, depth, norm, max_digits)
        return ModulusSchedule(ms, strict=True, infinite=True, alpha=forms.alpha)

    sched = make(1)
    if epsilon is None:
        return sched
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    b = nuclear_norm_bound(sched, forms, depth, p)
    base = max(1, math.ceil(b / epsilon))
    sched = make(base)
    while nuclear_norm_bound(sched, forms, depth, p) > epsilon:
        base *= 2
        sched = make(base)
    return sched


def _p_plane_constant(p: float) -> float:
    """Bound on ||Px||_2 / ||x||_p."""
    return max(1.0, 2.0 ** (0.5 - 1.0 / p)) if p != math.inf else math.sqrt(2.0)


def recipe_tail_sum(schedule: ModulusSchedule, norm: Callable[[int], float], J: int) -> float:
    """Majorant of sum_{k > J} ||f_k|| / m_{k-1} for an infinite recipe schedule.

    k = J + 1 is exact; for k >= J + 2, ||f_k|| / m_{k-1} <= 1 / (k^2 m_{k-2})
    and m_{k-2} >= 15^(k-2-J) m_J.
    """
    mJ = schedule.modulus(J)
    return norm(J + 1) * inv(mJ) + GROWTH / ((GROWTH - 1) * (J + 2) ** 2) * inv(mJ)


def lambda_k(k: int, schedule: ModulusSchedule) -> complex:
    if k < 1:
        raise ValueError("k starts at 1")
    if k <= 2:
        return 1 + 0j
    return unit_angle(1, 2 * schedule.modulus(k))


def lambda_kt(k: int, t: int, schedule: ModulusSchedule) -> complex:
    """lambda_{k,t} = sum_{l<t} lambda_k^l."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if k <= 2:
        return complex(t)
    return schedule.cached(("lkt", k, t), lambda: geometric_sum(schedule.modulus(k), t))


def tail_coefficient(k: int, t: int, schedule: ModulusSchedule) -> complex:
    """lambda_{k,t} / m_{k-1}."""
    return schedule.cached(("tc", k, t),
                           lambda: geometric_sum(schedule.modulus(k), t, schedule.modulus(k - 1)))


def lambda_power(k: int, t: int, schedule: ModulusSchedule) -> complex:
    """lambda_k^t with t reduced mod 2 m_k."""
    if k <= 2:
        return 1 + 0j
    return unit_angle(t, 2 * schedule.modulus(k))


def s_power_convergence(x: SparseVector, n: int, schedule: ModulusSchedule, p: float = 2.0) -> float:
    """||S^{2 m_n} x - x||_p, exact for finitely supported x."""
    t = 2 * schedule.modulus(n)
    diff = {k: (lambda_power(k, t, schedule) - 1) * v for k, v in x if k > n}
    return lp_norm(SparseVector(diff, Field.COMPLEX), p)


def s_power_bound(x: SparseVector, n: int, schedule: ModulusSchedule) -> float:
    """4 pi sum_{k>n} (m_n / m_k) |x_k|."""
    mn = schedule.modulus(n)
    return sum(4 * math.pi * (mn / schedule.modulus(k)) * abs(v) for k, v in x if k > n)


@dataclass(frozen=True)
class NormInterval:
    lo: float
    hi: float
    trunc: int
    usable: bool = True

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class OrbitState:
    """R^t x0 held symbolically; ``materialize`` expands the first trunc tail terms."""

    op: "DiagonalOperator"
    t: int
    x0: SparseVector
    trunc: int

    @property
    def base(self) -> PlanePoint:
        return project_P(self.x0)

    def materialize(self, trunc: int | None = None) -> SparseVector:
        return self.op._entries(self.x0, self.t, self.trunc if trunc is None else trunc)

    def tail_bound(self, trunc: int | None = None) -> float:
        return self.op._tail_bound(self.base, self.t, self.trunc if trunc is None else trunc)

    def with_trunc(self, trunc: int) -> "OrbitState":
        return OrbitState(self.op, self.t, self.x0, trunc)


def _interval(vec: SparseVector, tail: float, p: float, trunc: int) -> NormInterval:
    n = lp_norm(vec, p)
    return NormInterval(max(0.0, n - tail), n + tail, trunc)


def orbit_norm(state, p: float = 2.0, auto: bool = True, distance_to_start: bool = False) -> NormInterval:
    """Certified interval for ||R^t x||_p (or ||R^t x - x||_p).

    The tail past ``trunc`` is bounded in l^1, hence in every l^p. With
    ``auto`` the truncation doubles until the width is below 1e-6 lo or the
    cap is reached; then ``usable`` is False.
    """
    trunc = state.trunc
    cap = state.op.trunc_cap
    while True:
        vec = state.materialize(trunc)
        if distance_to_start:
            vec = vec - state.x0
        iv = _interval(vec, state.tail_bound(trunc), p, trunc)
        if not auto or iv.width <= 1e-6 * iv.lo or iv.width == 0.0:
            return iv
        if trunc >= cap:
            return NormInterval(iv.lo, iv.hi, trunc, usable=False)
        trunc = min(cap, 2 * trunc)


@dataclass(frozen=True)
class RecurrenceEstimate:
    k: int
    t: int
    s_part: float
    middle: float
    tail: float
    coarse_bound: float

    @property
    def bound(self) -> float:
        return self.s_part + self.middle + self.tail


@dataclass(frozen=True)
class TruncatedMatrix:
    matrix: np.ndarray
    provenance: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DiagonalOperator:
    schedule: ModulusSchedule
    forms: SeparatingSequence
    first_tail: int = 3

    @property
    def field(self) -> Field:
        return Field.COMPLEX

    @property
    def trunc_cap(self) -> int:
        return min(TRUNC_CAP, self.schedule.depth, len(self.forms))

    @property
    def F(self):
        return self.forms.F

    def _check_trunc(self, J: int) -> int:
        if J < self.first_tail - 1:
            raise ValueError(f"truncation {J} below the first tail index")
        if J > self.trunc_cap:
            raise ValueError(f"truncation {J} exceeds schedule/forms depth {self.trunc_cap}")
        return J

    def _form_value(self, k: int, c: PlanePoint):
        return self.forms.form(k)(c)

    def _entries(self, x0: SparseVector, t: int, J: int) -> SparseVector:
        J = self._check_trunc(J)
        s = self.schedule
        out = {k: lambda_power(k, t, s) * v for k, v in x0}
        c = project_P(x0)
        if c.c1 != 0 or c.c2 != 0:
            for k in range(3, J + 1):
                coef = tail_coefficient(k, t, s)
                if coef != 0:
                    out[k] = out.get(k, 0j) + coef * self._form_value(k, c)
        return SparseVector(out, Field.COMPLEX)

    def _tail_bound(self, c: PlanePoint, t: int, J: int) -> float:
        r = c.norm()
        if r == 0 or t == 0:
            return 0.0
        s = self.schedule
        if s.infinite:
            return t * r * recipe_tail_sum(s, self.forms.norm, J)
        total = 0.0
        for k in range(J + 1, s.depth + 1):
            total += abs(tail_coefficient(k, t, s)) * self.forms.norm(k)
        return total * r

    def apply_R(self, x: SparseVector, trunc_K: int = TRUNC_DEFAULT) -> tuple[SparseVector, float]:
        """One application of R, truncated at trunc_K, and the dropped-tail bound."""
        J = self._check_trunc(min(trunc_K, self.trunc_cap))
        s = self.schedule
        out = {k: lambda_k(k, s) * v for k, v in x}
        c = project_P(x)
        if c.c1 != 0 or c.c2 != 0:
            for k in range(3, J + 1):
                out[k] = out.get(k, 0j) + inv(s.modulus(k - 1)) * self._form_value(k, c)
        return SparseVector(out, Field.COMPLEX), self._tail_bound(c, 1, J)

    def iterate_closed_form(self, x: SparseVector, t: int, trunc_K: int = TRUNC_DEFAULT) -> OrbitState:
        if t < 0:
            raise ValueError("t must be >= 0")
        return OrbitState(self, int(t), x.as_complex(), min(trunc_K, self.trunc_cap))

    def divergence_lower_bound(self, x: SparseVector, k: int, t: int, p: float = 2.0) -> float:
        """(2/pi) |f_k(Px)| - ||x||_p, valid for m_{k-1} <= t <= m_k."""
        s = self.schedule
        if not s.modulus(k - 1) <= t <= s.modulus(k):
            raise ValueError(f"t = {t} outside the window [m_{k - 1}, m_{k}]")
        return 2.0 / math.pi * abs(self._form_value(k, project_P(x))) - lp_norm(x, p)

    def recurrence_estimate(self, x: SparseVector, k: int, trunc_K: int = TRUNC_DEFAULT,
                            p: float = 2.0) -> RecurrenceEstimate:
        """Certified bound on ||R^t x - x|| at t = 2 m_{k-1}.

        Terms j < k vanish exactly; the middle term and the tail use the exact
        |lambda_{j,t}| up to trunc_K and the recipe majorant beyond. The
        coarse bound is the textbook one, 2|f_k(Px)| plus
        ||Px|| sum_{j>k} 2 m_{j-2} ||f_j|| / m_{j-1}.
        """
        c = project_P(x)
        if not classify_base_point(c, self.F).in_f:
            raise ValueError("recurrence estimate needs Px in F")
        s = self.schedule
        if not 3 <= k <= self.trunc_cap:
            raise ValueError(f"k = {k} outside 3..{self.trunc_cap}")
        J = max(k, min(trunc_K, self.trunc_cap))
        t = 2 * s.modulus(k - 1)
        xc = x.as_complex()
        s_part = lp_norm(SparseVector(
            {j: (lambda_power(j, t, s) - 1) * v for j, v in xc}, Field.COMPLEX), p)
        middle = abs(tail_coefficient(k, t, s) * self._form_value(k, c))
        tail = sum(abs(tail_coefficient(j, t, s) * self._form_value(j, c)) for j in range(k + 1, J + 1))
        tail += self._tail_bound(c, t, J)
        r = c.norm()
        coarse_tail = 0.0
        for j in range(k + 1, s.depth + 1):
            coarse_tail += 2 * self.forms.norm(j) / s.ratio(j - 2)
        if s.infinite:
            coarse_tail += 2.0 / s.depth
        coarse = s_part + 2 * abs(self._form_value(k, c)) + r * coarse_tail
        return RecurrenceEstimate(k, t, s_part, middle, tail, coarse)

    def recurrence_trace(self, x: SparseVector, n_max: int | None = None, trunc_K: int = TRUNC_DEFAULT,
                         p: float = 2.0) -> list[RecurrenceEstimate]:
        n_max = self.trunc_cap if n_max is None else min(n_max, self.trunc_cap)
        return [self.recurrence_estimate(x, k, trunc_K, p) for k in range(3, n_max + 1)]

    def nuclear_norm_bound(self, depth: int | None = None, p: float = 2.0) -> float:
        return nuclear_norm_bound(self.schedule, self.forms, depth, p)

    def truncation(self, n: int) -> TruncatedMatrix:
        """Matrix of R on span(e_1..e_n): lower triangular in this ordering."""
        if n > self.trunc_cap:
            raise ValueError(f"truncation {n} exceeds depth {self.trunc_cap}")
        s = self.schedule
        A = np.zeros((n, n), dtype=complex)
        for k in range(1, n + 1):
            A[k - 1, k - 1] = lambda_k(k, s)
        for k in range(3, n + 1):
            w = inv(s.modulus(k - 1))
            a1, a2 = self.forms.form(k).coefficients
            A[k - 1, 0] += w * a1
            A[k - 1, 1] += w * a2
        return TruncatedMatrix(A, f"diagonal R, n={n}")


def nuclear_norm_bound(schedule: ModulusSchedule, forms: SeparatingSequence,
                       depth: int | None = None, p: float = 2.0) -> float:
    """sum_{k=3}^{depth} (|lambda_k - 1| + c_p ||f_k|| / m_{k-1}) plus the analytic tail.

    c_p bounds ||P||_{l^p -> l^2}. An upper bound for the nuclear norm of R - I.
    """
    D = schedule.depth if depth is None else min(depth, schedule.depth)
    cp = _p_plane_constant(p)
    total = 0.0
    for k in range(3, D + 1):
        mk = schedule.modulus(k)
        total += 2.0 * math.sin(math.pi * inv(2 * mk)) + cp * forms.norm(k) * inv(schedule.modulus(k - 1))
    if schedule.infinite:
        mD = schedule.modulus(D)
        total += math.pi / (GROWTH - 1) * inv(mD) + cp * recipe_tail_sum(schedule, forms.norm, D)
    return total
