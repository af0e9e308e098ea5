"""Real version: S rotates each plane span(e_{2k-1}, e_{2k}), k >= 2, by
theta_k = pi / m_k and fixes e_1, e_2; R adds (1/m_{k-1}) f_k(Px) e_{2k}.

Identifying a e_{2k-1} + b e_{2k} with a + ib turns the block rotation into
multiplication by lambda_k, so the tail vector mu_{k,t} corresponds to
i * lambda_{k,t} and all exactness properties carry over.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Field, PlanePoint, SparseVector, classify_base_point, lp_norm, project_P
from .diagonal import (
    TRUNC_DEFAULT,
    DiagonalOperator,
    OrbitState,
    RecurrenceEstimate,
    TruncatedMatrix,
    geometric_sum,
    inv,
    recipe_tail_sum,
    unit_angle,
)

SQRT2 = math.sqrt(2.0)


def block_of(i: int) -> int:
    """Block k holding index i >= 3 (indices 2k-1, 2k)."""
    return (i + 1) // 2


@dataclass(frozen=True)
class RotationBlock:
    k: int
    m: int

    @property
    def cos_sin(self) -> tuple[float, float]:
        z = unit_angle(1, 2 * self.m)
        return z.real, z.imag

    def matrix(self):
        c, s = self.cos_sin
        return [[c, -s], [s, c]]


def _rotate(x: SparseVector, t: int, schedule) -> dict[int, float]:
    out: dict[int, float] = {}
    blocks = {}
    for i, v in x:
        if i <= 2:
            out[i] = v
        else:
            blocks.setdefault(block_of(i), [0.0, 0.0])[(i + 1) % 2] = v
    for k, (a, b) in sorted(blocks.items()):
        z = complex(a, b) * unit_angle(t, 2 * schedule.modulus(k))
        out[2 * k - 1] = out.get(2 * k - 1, 0.0) + z.real
        out[2 * k] = out.get(2 * k, 0.0) + z.imag
    return out


def apply_S_real(x: SparseVector, schedule, t: int = 1) -> SparseVector:
    """S^t x for the block rotation operator (t reduced per block mod 2 m_k)."""
    if x.field is not Field.REAL:
        raise ValueError("the rotation operator acts on real vectors")
    return SparseVector(_rotate(x, t, schedule), Field.REAL)


def mu_kt(k: int, t: int, schedule) -> tuple[float, float]:
    """(sum_{l<t} cos(l theta_k), sum_{l<t} sin(l theta_k)) via lambda_{k,t}."""
    if k < 2:
        raise ValueError("blocks start at k = 2")
    z = schedule.cached(("lkt", k, t), lambda: geometric_sum(schedule.modulus(k), t))
    return z.real, z.imag


def mu_vector(k: int, t: int, schedule) -> SparseVector:
    c, s = mu_kt(k, t, schedule)
    return SparseVector({2 * k - 1: -s, 2 * k: c}, Field.REAL)


@dataclass(frozen=True)
class RotationOperator(DiagonalOperator):
    first_tail: int = 2

    def __post_init__(self):
        if self.forms.F.field is not Field.REAL:
            raise ValueError("the rotation operator needs real-mode separating forms")

    @property
    def field(self) -> Field:
        return Field.REAL

    def _tail_coef(self, k: int, t: int) -> complex:
        s = self.schedule
        return s.cached(("tc", k, t), lambda: geometric_sum(s.modulus(k), t, s.modulus(k - 1)))

    def _entries(self, x0: SparseVector, t: int, J: int) -> SparseVector:
        J = self._check_trunc(J)
        out = _rotate(x0, t, self.schedule)
        c = project_P(x0)
        if c.c1 != 0 or c.c2 != 0:
            for k in range(2, J + 1):
                z = self._tail_coef(k, t)
                if z == 0:
                    continue
                fk = self._form_value(k, c)
                # mu_{k,t} = Re(lambda) e_{2k} - Im(lambda) e_{2k-1}
                out[2 * k - 1] = out.get(2 * k - 1, 0.0) - z.imag * fk
                out[2 * k] = out.get(2 * k, 0.0) + z.real * fk
        return SparseVector(out, Field.REAL)

    def _tail_bound(self, c: PlanePoint, t: int, J: int) -> float:
        # ||mu_{k,t}||_1 <= sqrt(2) |lambda_{k,t}| <= sqrt(2) t
        r = c.norm()
        if r == 0 or t == 0:
            return 0.0
        s = self.schedule
        if s.infinite:
            return SQRT2 * t * r * recipe_tail_sum(s, self.forms.norm, J)
        total = 0.0
        for k in range(J + 1, s.depth + 1):
            total += abs(self._tail_coef(k, t)) * self.forms.norm(k)
        return SQRT2 * total * r

    def apply_R(self, x: SparseVector, trunc_K: int = TRUNC_DEFAULT) -> tuple[SparseVector, float]:
        if x.field is not Field.REAL:
            raise ValueError("the rotation operator acts on real vectors")
        J = self._check_trunc(min(trunc_K, self.trunc_cap))
        out = _rotate(x, 1, self.schedule)
        c = project_P(x)
        if c.c1 != 0 or c.c2 != 0:
            for k in range(2, J + 1):
                out[2 * k] = out.get(2 * k, 0.0) + inv(self.schedule.modulus(k - 1)) * self._form_value(k, c)
        return SparseVector(out, Field.REAL), self._tail_bound(c, 1, J)

    def iterate_closed_form(self, x: SparseVector, t: int, trunc_K: int = TRUNC_DEFAULT) -> OrbitState:
        if x.field is not Field.REAL:
            raise ValueError("the rotation operator acts on real vectors")
        if t < 0:
            raise ValueError("t must be >= 0")
        return OrbitState(self, int(t), x, min(trunc_K, self.trunc_cap))

    def divergence_lower_bound(self, x: SparseVector, k: int, t: int, p: float = 2.0) -> float:
        """(sqrt(2)/pi) |f_k(Px)| - c_p ||x||_p, valid for m_{k-1} <= t <= m_k.

        c_p = 2^|1/p - 1/2| bounds the l^p norm of a plane rotation.
        """
        s = self.schedule
        if not s.modulus(k - 1) <= t <= s.modulus(k):
            raise ValueError(f"t = {t} outside the window [m_{k - 1}, m_{k}]")
        fk = abs(self._form_value(k, project_P(x)))
        return SQRT2 / math.pi * fk - rotation_constant(p) * lp_norm(x, p)

    def recurrence_estimate(self, x: SparseVector, k: int, trunc_K: int = TRUNC_DEFAULT,
                            p: float = 2.0) -> RecurrenceEstimate:
        """Certified bound on ||R^t x - x|| at t = 2 m_{k-1}; blocks j < k recur exactly."""
        c = project_P(x)
        if not classify_base_point(c, self.F).in_f:
            raise ValueError("recurrence estimate needs Px in F")
        s = self.schedule
        if not 2 <= k <= self.trunc_cap:
            raise ValueError(f"k = {k} outside 2..{self.trunc_cap}")
        t = 2 * s.modulus(k - 1)
        J = max(k, min(trunc_K, self.trunc_cap))
        s_part = lp_norm(SparseVector(_rotate(x, t, s), Field.REAL) - x, p)
        middle = SQRT2 * abs(self._tail_coef(k, t) * self._form_value(k, c))
        tail = sum(SQRT2 * abs(self._tail_coef(j, t) * self._form_value(j, c))
                   for j in range(k + 1, J + 1))
        tail += self._tail_bound(c, t, J)
        coarse_tail = sum(2 * self.forms.norm(j) / s.ratio(j - 2) for j in range(max(k + 1, 3), s.depth + 1))
        if s.infinite:
            coarse_tail += 2.0 / s.depth
        coarse = s_part + SQRT2 * (2 * abs(self._form_value(k, c)) + c.norm() * coarse_tail)
        return RecurrenceEstimate(k, t, s_part, middle, tail, coarse)

    def recurrence_trace(self, x: SparseVector, n_max: int | None = None, trunc_K: int = TRUNC_DEFAULT,
                         p: float = 2.0) -> list[RecurrenceEstimate]:
        n_max = self.trunc_cap if n_max is None else min(n_max, self.trunc_cap)
        return [self.recurrence_estimate(x, k, trunc_K, p) for k in range(2, n_max + 1)]

    def truncation(self, n_blocks: int) -> TruncatedMatrix:
        """Matrix of R on span(e_1 .. e_{2 n_blocks})."""
        n = 2 * n_blocks
        if n_blocks > self.trunc_cap:
            raise ValueError("truncation exceeds depth")
        A = np.zeros((n, n))
        A[0, 0] = A[1, 1] = 1.0
        for k in range(2, n_blocks + 1):
            c, s = RotationBlock(k, self.schedule.modulus(k)).cos_sin
            i, j = 2 * k - 2, 2 * k - 1
            A[i, i], A[i, j], A[j, i], A[j, j] = c, -s, s, c
            w = inv(self.schedule.modulus(k - 1))
            a1, a2 = self.forms.form(k).coefficients
            A[j, 0] += w * float(a1.real if isinstance(a1, complex) else a1)
            A[j, 1] += w * float(a2.real if isinstance(a2, complex) else a2)
        return TruncatedMatrix(A, f"rotation R, {n_blocks} blocks")


def rotation_constant(p: float) -> float:
    """Norm of a 2x2 rotation on l^p, at most 2^|1/p - 1/2|."""
    return 2.0 ** abs((0.0 if p == math.inf else 1.0 / p) - 0.5)
