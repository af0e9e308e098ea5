"""Shared substrate: fields, sparse coordinate vectors, l^p norms, the plane
projection P onto span(e1, e2) and closed unions of lines through 0 in that
plane.

Everything here is immutable; all functions are pure.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

INF = math.inf

# Relative tolerance for deciding that a plane point lies on F.
MEMBERSHIP_TOL = 1e-12
# Boundary samples per slope disk for the complex-mode distance.
DISK_SAMPLES = 1024


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, value: "Field | str") -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown field {value!r}; expected 'real' or 'complex'") from None


def check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"l^p exponent must satisfy p >= 1, got {p}")
    return p


def _coerce(value, fld: Field):
    if fld is Field.REAL:
        if isinstance(value, complex):
            if value.imag != 0.0:
                raise ValueError(f"complex entry {value!r} in a real vector")
            value = value.real
        return float(value)
    return complex(value)


@dataclass(frozen=True)
class SparseVector:
    """Finitely supported vector sum_i x_i e_i with 1-based indices.

    Zero entries are dropped on construction, so ``support`` is exact.
    """

    entries: Mapping[int, complex] = field(default_factory=dict)
    field: Field = Field.REAL

    def __post_init__(self):
        fld = Field.parse(self.field)
        clean = {}
        for i, v in dict(self.entries).items():
            i = int(i)
            if i < 1:
                raise ValueError(f"indices start at 1, got {i}")
            v = _coerce(v, fld)
            if v != 0:
                clean[i] = v
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def basis(cls, i: int, fld: Field | str = Field.REAL) -> "SparseVector":
        return cls({i: 1.0}, fld)

    @classmethod
    def from_dense(cls, values: Iterable, fld: Field | str = Field.REAL) -> "SparseVector":
        return cls({i + 1: v for i, v in enumerate(values)}, fld)

    def __getitem__(self, i: int):
        return self.entries.get(i, 0.0 if self.field is Field.REAL else 0j)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.entries)

    @property
    def max_index(self) -> int:
        return max(self.entries, default=0)

    def _combine(self, other: "SparseVector", sign: float) -> "SparseVector":
        fld = Field.COMPLEX if Field.COMPLEX in (self.field, other.field) else Field.REAL
        out = dict(self.entries)
        for i, v in other.entries.items():
            out[i] = out.get(i, 0.0) + sign * v
        return SparseVector(out, fld)

    def __add__(self, other: "SparseVector") -> "SparseVector":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self._combine(other, -1.0)

    def __neg__(self) -> "SparseVector":
        return SparseVector({i: -v for i, v in self.entries.items()}, self.field)

    def __mul__(self, scalar) -> "SparseVector":
        fld = self.field
        if isinstance(scalar, complex) and scalar.imag != 0.0:
            fld = Field.COMPLEX
        return SparseVector({i: scalar * v for i, v in self.entries.items()}, fld)

    __rmul__ = __mul__

    def to_dense(self, n: int | None = None) -> np.ndarray:
        n = self.max_index if n is None else n
        dtype = float if self.field is Field.REAL else complex
        out = np.zeros(n, dtype=dtype)
        for i, v in self.entries.items():
            if i <= n:
                out[i - 1] = v
        return out

    def as_complex(self) -> "SparseVector":
        return SparseVector(self.entries, Field.COMPLEX)


def lp_norm(v: SparseVector | Iterable, p: float = 2.0) -> float:
    """(sum |v_i|^p)^(1/p), or max |v_i| for p = inf."""
    p = check_p(p)
    vals = v.entries.values() if isinstance(v, SparseVector) else v
    a = np.abs(np.fromiter(vals, dtype=complex))
    if a.size == 0:
        return 0.0
    if p == INF:
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.hypot.reduce(a)) if a.size > 1 else float(a[0])
    # scale first so large coordinates do not overflow
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def decreasing_rearrangement(v: SparseVector) -> list[float]:
    return sorted((abs(x) for x in v.entries.values()), reverse=True)


class PlanePoint(NamedTuple):
    """Coordinates (c1, c2) of a point of span(e1, e2)."""

    c1: complex
    c2: complex

    def norm(self) -> float:
        return math.hypot(abs(self.c1), abs(self.c2))

    def scaled(self, s) -> "PlanePoint":
        return PlanePoint(s * self.c1, s * self.c2)

    def to_vector(self, fld: Field | str = Field.REAL) -> SparseVector:
        return SparseVector({1: self.c1, 2: self.c2}, fld)


def project_P(x: SparseVector) -> PlanePoint:
    return PlanePoint(x[1], x[2])


def _turns_to_unit(theta: Fraction) -> tuple[float, float]:
    """(cos, sin) of the angle 2*pi*theta, exact on quarter turns."""
    q = theta % 1
    exact = {Fraction(0): (1.0, 0.0), Fraction(1, 4): (0.0, 1.0),
             Fraction(1, 2): (-1.0, 0.0), Fraction(3, 4): (0.0, -1.0)}
    if q in exact:
        return exact[q]
    a = 2.0 * math.pi * float(q)
    return math.cos(a), math.sin(a)


def _line_distance_real(c: PlanePoint, theta: float) -> float:
    """Distance from c to the (complexified) real line at angle theta radians."""
    return abs(c.c2 * math.cos(theta) - c.c1 * math.sin(theta))


@dataclass(frozen=True)
class LineUnion:
    """Closed union of lines through 0 in span(e1, e2).

    Real mode: ``arcs`` are closed intervals ``(lo, hi)`` of line angles in
    turns (a line at angle a is the same as at a + 1/2), ``lines`` are
    isolated angles. Complex points are tested against the complexified
    lines.

    Complex mode: lines {c2 = s c1} for slopes s in closed ``disks``
    ``(center, radius)`` or in ``slopes``; ``vertical`` adds {c1 = 0}.
    """

    field: Field = Field.REAL
    arcs: tuple[tuple[Fraction, Fraction], ...] = ()
    lines: tuple[Fraction, ...] = ()
    disks: tuple[tuple[complex, float], ...] = ()
    slopes: tuple[complex, ...] = ()
    vertical: bool = False

    def __post_init__(self):
        fld = Field.parse(self.field)
        object.__setattr__(self, "field", fld)
        if fld is Field.REAL:
            arcs = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.arcs)
            lines = tuple(Fraction(a) % Fraction(1, 2) for a in self.lines)
            for lo, hi in arcs:
                if not (0 <= lo < Fraction(1, 2)):
                    raise ValueError(f"arc start {lo} outside [0, 1/2)")
                if not (lo <= hi <= lo + Fraction(1, 2)):
                    raise ValueError(f"arc [{lo}, {hi}] must satisfy lo <= hi <= lo + 1/2")
            object.__setattr__(self, "arcs", arcs)
            object.__setattr__(self, "lines", lines)
            if self.disks or self.slopes or self.vertical:
                raise ValueError("disks/slopes/vertical are complex-mode fields")
            if not (arcs or lines):
                raise ValueError("F must be non-empty")
        else:
            disks = tuple((complex(c), float(r)) for c, r in self.disks)
            for _, r in disks:
                if r < 0:
                    raise ValueError(f"disk radius must be >= 0, got {r}")
            object.__setattr__(self, "disks", disks)
            object.__setattr__(self, "slopes", tuple(complex(s) for s in self.slopes))
            if self.arcs or self.lines:
                raise ValueError("arcs/lines are real-mode fields")
            if not (disks or self.slopes or self.vertical):
                raise ValueError("F must be non-empty")

    @classmethod
    def real(cls, arcs=(), lines=()) -> "LineUnion":
        return cls(Field.REAL, arcs=tuple(arcs), lines=tuple(lines))

    @classmethod
    def complex(cls, disks=(), slopes=(), vertical=False) -> "LineUnion":
        return cls(Field.COMPLEX, disks=tuple(disks), slopes=tuple(slopes), vertical=vertical)

    @property
    def n_components(self) -> int:
        return len(self.arcs) + len(self.lines) + len(self.disks) + len(self.slopes) + int(self.vertical)

    def is_single_line(self) -> bool:
        if self.field is Field.REAL:
            angles = set(self.lines) | {lo for lo, hi in self.arcs if lo == hi}
            return len(angles) == 1 and all(lo == hi for lo, hi in self.arcs)
        pts = set(self.slopes) | {c for c, r in self.disks if r == 0}
        return all(r == 0 for _, r in self.disks) and len(pts) + int(self.vertical) == 1

    def distance(self, c: PlanePoint) -> float:
        """Euclidean (Hermitian) distance from c to F."""
        if self.field is Field.REAL:
            return self._distance_real(c)
        return self._distance_complex(c)

    def _distance_real(self, c: PlanePoint) -> float:
        best = INF
        for a in self.lines:
            cs, sn = _turns_to_unit(a)
            best = min(best, abs(c.c2 * cs - c.c1 * sn))
        if not self.arcs:
            return best
        # |c2 cos(phi) - c1 sin(phi)|^2 = A + R cos(2 phi - psi)
        a1, a2 = abs(c.c1) ** 2, abs(c.c2) ** 2
        cross = (c.c1 * np.conj(c.c2)).real
        psi = math.atan2(-cross, (a2 - a1) / 2.0)
        phi_star = (psi + math.pi) / 2.0
        for lo, hi in self.arcs:
            phi_lo, phi_hi = 2 * math.pi * float(lo), 2 * math.pi * float(hi)
            # critical point shifted into [phi_lo, phi_lo + pi)
            cand = phi_lo + (phi_star - phi_lo) % math.pi
            if cand <= phi_hi:
                best = min(best, _line_distance_real(c, cand))
            for end in (lo, hi):
                cs, sn = _turns_to_unit(end)
                best = min(best, abs(c.c2 * cs - c.c1 * sn))
        return best

    def _distance_complex(self, c: PlanePoint) -> float:
        c1, c2 = complex(c.c1), complex(c.c2)

        def to_slope(s: complex) -> float:
            return abs(c2 - s * c1) / math.sqrt(1.0 + abs(s) ** 2)

        best = INF
        if self.vertical:
            best = abs(c1)
        for s in self.slopes:
            best = min(best, to_slope(s))
        for center, r in self.disks:
            if c1 != 0 and abs(c2 / c1 - center) <= r:
                return 0.0
            if r == 0:
                best = min(best, to_slope(center))
                continue
            # the nearest line of a slope disk lies on its boundary circle
            def g(beta: float) -> float:
                return to_slope(center + r * complex(math.cos(beta), math.sin(beta)))

            betas = np.linspace(0.0, 2 * math.pi, DISK_SAMPLES, endpoint=False)
            vals = [g(b) for b in betas]
            j = int(np.argmin(vals))
            step = 2 * math.pi / DISK_SAMPLES
            res = minimize_scalar(g, bounds=(betas[j] - step, betas[j] + step),
                                  method="bounded", options={"xatol": 1e-13})
            best = min(best, vals[j], float(res.fun))
        return best

    def contains(self, c: PlanePoint) -> bool:
        return classify_base_point(c, self).in_f


class BaseClassification(NamedTuple):
    in_f: bool
    distance: float


def classify_base_point(c: PlanePoint, F: LineUnion) -> BaseClassification:
    """Whether the line through c belongs to F, with the distance d(c, F).

    The origin is always in F. Membership uses d(c, F) <= 1e-12 |c|.
    """
    r = c.norm()
    if r == 0:
        return BaseClassification(True, 0.0)
    d = F.distance(c)
    if d <= MEMBERSHIP_TOL * r:
        return BaseClassification(True, 0.0)
    return BaseClassification(False, d)


def parse_number(value) -> complex | float | Fraction:
    """Numbers from configs: ints, floats, "num/den" strings or [re, im] pairs."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {value!r}")
        return complex(float(parse_number(value[0])), float(parse_number(value[1])))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, float, Fraction, complex)):
        return value
    raise ValueError(f"cannot parse number from {value!r}")
