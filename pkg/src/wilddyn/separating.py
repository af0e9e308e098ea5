"""Nets on C = (unit sphere) ∩ F and the separating sequence of linear forms.

The forms f_n vanish on the line through the n-th net point, so their
kernels lie in F, and have norm n**alpha. Off F, |f_n(x)| >= n**alpha d(x, F)
grows without bound; on F, enumerating finer and finer nets makes some
f_p(x) small again infinitely often.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Field, LineUnion, PlanePoint, _turns_to_unit, classify_base_point

MAX_LEVEL = 40


@dataclass(frozen=True)
class NetLevel:
    k: int
    points: tuple[PlanePoint, ...]

    @property
    def mesh(self) -> float:
        return 2.0 ** -self.k

    def __len__(self) -> int:
        return len(self.points)


def _real_level(F: LineUnion, k: int) -> list[PlanePoint]:
    pts = []
    scale = 2 ** k
    for lo, hi in F.arcs:
        width = hi - lo
        # arc length of the circle arc is 2*pi*width; spacing <= 2^-k
        n_int = max(1, math.ceil(2 * math.pi * float(width) * scale)) if width > 0 else 0
        angles = [lo] if n_int == 0 else [lo + width * Fraction(j, n_int) for j in range(n_int + 1)]
        for a in angles:
            cs, sn = _turns_to_unit(a)
            pts.append(PlanePoint(cs, sn))
            pts.append(PlanePoint(-cs, -sn))
    for a in F.lines:
        cs, sn = _turns_to_unit(a)
        pts.append(PlanePoint(cs, sn))
        pts.append(PlanePoint(-cs, -sn))
    return pts


def _phases(delta: float) -> np.ndarray:
    n = max(1, math.ceil(2 * math.pi / delta))
    return np.exp(2j * math.pi * np.arange(n) / n)


def _complex_level(F: LineUnion, k: int) -> list[PlanePoint]:
    # slope grid spacing h and phase spacing delta give covering radius h + delta/2
    # because s -> (1, s)/sqrt(1 + |s|^2) is 1-Lipschitz
    h = 2.0 ** -k / 2
    delta = 2.0 ** -k
    phases = _phases(delta)
    slopes: list[complex] = []
    for center, r in F.disks:
        n_rings = math.ceil(r / h) if r > 0 else 0
        for j in range(n_rings + 1):
            rho = r * j / n_rings if n_rings else 0.0
            n_ang = max(1, math.ceil(2 * math.pi * rho / h))
            for l in range(n_ang):
                slopes.append(center + rho * complex(math.cos(2 * math.pi * l / n_ang),
                                                     math.sin(2 * math.pi * l / n_ang)))
    slopes.extend(F.slopes)
    pts = []
    for s in slopes:
        nrm = math.sqrt(1.0 + abs(s) ** 2)
        u1, u2 = 1.0 / nrm, s / nrm
        for ph in phases:
            pts.append(PlanePoint(complex(ph * u1), complex(ph * u2)))
    if F.vertical:
        for ph in phases:
            pts.append(PlanePoint(0j, complex(ph)))
    return pts


def build_net(F: LineUnion, k: int) -> NetLevel:
    """A 2^-k net of C = S ∩ F."""
    if k < 1:
        raise ValueError("net level k starts at 1")
    if k > MAX_LEVEL:
        raise ValueError(f"net level {k} exceeds the size guard {MAX_LEVEL}")
    pts = _real_level(F, k) if F.field is Field.REAL else _complex_level(F, k)
    return NetLevel(k, tuple(pts))


def _levels_for(F: LineUnion, n: int) -> list[NetLevel]:
    levels, total, k = [], 0, 1
    while total < n:
        lev = build_net(F, k)
        levels.append(lev)
        total += len(lev)
        k += 1
    return levels


def enumerate_points(F: LineUnion, N: int) -> list[PlanePoint]:
    """First N points of the concatenation H_1, H_2, ..."""
    if N < 1:
        raise ValueError("N must be >= 1")
    out: list[PlanePoint] = []
    for lev in _levels_for(F, N):
        out.extend(lev.points)
    return out[:N]


def covering_exponent(fld: Field) -> float:
    """beta with ||x - u_{p_n}|| <= K / n^beta (d = 2)."""
    return 1.0 if fld is Field.REAL else 1.0 / 3.0


def net_constant(F: LineUnion, N: int) -> float:
    """Constant K with min_{p <= n} ||y - u_p|| <= K n^-beta for y in C, n <= N.

    Uses the nominal covering radius 2^-k of level k: once the prefix holds
    all of H_k, i.e. c_k <= n < c_{k+1}, the bound 2^-k <= K n^-beta needs
    K >= 2^-k (c_{k+1} - 1)^beta. Before H_1 completes distances are <= 2.
    """
    beta = covering_exponent(F.field)
    levels = _levels_for(F, N + 1)
    levels.append(build_net(F, len(levels) + 1))
    sizes = np.cumsum([len(l) for l in levels])
    K = 2.0 * max(sizes[0] - 1, 1) ** beta
    for j in range(len(levels) - 1):
        K = max(K, 2.0 ** -(j + 1) * float(sizes[j + 1] - 1) ** beta)
    return float(K)


def level_size_constant(F: LineUnion, k_max: int) -> float:
    """L with |H_k| <= L 2^(k(d-1)) (real) or L 2^(k(2d-1)) (complex), k <= k_max."""
    e = 1 if F.field is Field.REAL else 3
    return max(len(build_net(F, k)) / 2.0 ** (k * e) for k in range(1, k_max + 1))


@dataclass(frozen=True)
class LinearForm:
    """f(c) = scale * (b1 c1 + b2 c2) with (b1, b2) a unit vector.

    Kept factored so f(u) is exactly 0 when (b1, b2) = (-u2, u1).
    """

    direction: tuple[complex, complex]
    scale: float

    @property
    def coefficients(self) -> tuple[complex, complex]:
        b1, b2 = self.direction
        return self.scale * b1, self.scale * b2

    @property
    def norm(self) -> float:
        b1, b2 = self.direction
        return self.scale * math.hypot(abs(b1), abs(b2))

    def __call__(self, c: PlanePoint):
        b1, b2 = self.direction
        return self.scale * (b1 * c[0] + b2 * c[1])


@dataclass(frozen=True)
class SeparatingSequence:
    F: LineUnion
    u: tuple[PlanePoint, ...]
    forms: tuple[LinearForm, ...]
    alpha: float
    k_net: float
    beta: float

    def __len__(self) -> int:
        return len(self.forms)

    def form(self, n: int) -> LinearForm:
        if not 1 <= n <= len(self.forms):
            raise IndexError(f"form index {n} outside 1..{len(self.forms)}")
        return self.forms[n - 1]

    def norm(self, n: int) -> float:
        """||f_n|| = n^alpha, also past the materialized range."""
        return float(n) ** self.alpha

    def values(self, c: PlanePoint, n_max: int | None = None) -> np.ndarray:
        n_max = len(self.forms) if n_max is None else n_max
        return np.array([self.forms[n](c) for n in range(n_max)])


def make_forms(F: LineUnion, N: int) -> SeparatingSequence:
    u = enumerate_points(F, N)
    beta = covering_exponent(F.field)
    alpha = beta / 2.0
    forms = []
    for n, pt in enumerate(u, start=1):
        # kernel is the line through u_n, which lies in F
        forms.append(LinearForm((-pt.c2, pt.c1), float(n) ** alpha))
    return SeparatingSequence(F, tuple(u), tuple(forms), alpha, net_constant(F, N), beta)


@dataclass
class SampleCheck:
    point: PlanePoint
    distance: float
    statistic: float
    bound: float
    passed: bool


@dataclass
class SeparationReport:
    N: int
    inside: list[SampleCheck] = field(default_factory=list)
    outside: list[SampleCheck] = field(default_factory=list)
    violations: list[PlanePoint] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and all(s.passed for s in self.inside + self.outside)


def verify_separation(seq: SeparatingSequence, samples_in: Sequence[PlanePoint],
                      samples_out: Sequence[PlanePoint], N: int) -> SeparationReport:
    """Divergence off F and recurrent smallness on F, checked at horizon N."""
    N = min(N, len(seq))
    rep = SeparationReport(N)
    half = max(1, N // 2)
    for c in samples_out:
        cls = classify_base_point(c, seq.F)
        if cls.in_f:
            rep.violations.append(c)
            continue
        vals = np.abs(seq.values(c, N))[half - 1:]
        stat = float(vals.min())
        bound = half ** seq.alpha * cls.distance
        rep.outside.append(SampleCheck(c, cls.distance, stat, bound, stat >= bound * (1 - 1e-9)))
    for c in samples_in:
        cls = classify_base_point(c, seq.F)
        if not cls.in_f:
            rep.violations.append(c)
            continue
        stat = float(np.abs(seq.values(c, N)).min()) if N else 0.0
        bound = seq.k_net * c.norm() * N ** (seq.alpha - seq.beta)
        rep.inside.append(SampleCheck(c, 0.0, stat, bound, stat <= bound))
    return rep


def best_prefix_values(seq: SeparatingSequence, c: PlanePoint, N: int | None = None) -> np.ndarray:
    """n -> min_{p <= n} |f_p(c)|."""
    return np.minimum.accumulate(np.abs(seq.values(c, N)))
