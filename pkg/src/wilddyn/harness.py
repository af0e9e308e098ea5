"""Config-driven experiment runner.

A TOML config names the field, the norm, the operator and the set F, plus a
list of sparse vectors. ``run_experiment`` writes one orbit CSV per vector,
classification.json and lemma_suite.txt. Schema and an example live in
configs/ and the README.
"""
from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .core import INF, Field, LineUnion, SparseVector, classify_base_point, lp_norm, parse_number, project_P
from .diagonal import DiagonalOperator, ModulusSchedule, build_schedule, orbit_norm
from .hajek_smith import HSOperator, build_hs_layout
from .rotation import RotationOperator
from .separating import make_forms
from .spectral import backward_shift_apply

OPERATORS = ("diagonal", "rotation", "hajek_smith", "backward_shift")
CSV_HEADER = "t,norm_lo,norm_hi,dist0_lo,dist0_hi"
OUTPUT_ENV = "WILDDYN_OUTPUT_DIR"
RECURRENCE_TARGET = 1e-3


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class ExperimentConfig:
    field: Field
    p: float
    operator: str
    F: LineUnion | None
    depth: int
    strict: bool = True
    vectors: list[tuple[str, SparseVector]] = field(default_factory=list)
    horizon: str | list[int] = "windows"
    trunc: int = 16
    seed: int = 0
    output_dir: str = "out"
    epsilon: float | None = None
    n_forms: int | None = None
    moduli: list[int] | None = None
    suites: list[str] = field(default_factory=list)


# --- parsing ------------------------------------------------------------------

def _int(raw, key: str) -> int:
    if isinstance(raw, bool):
        raise ConfigError(key, "expected an integer")
    if isinstance(raw, str) and re.fullmatch(r"\s*\d+\s*", raw):
        return int(raw)
    if isinstance(raw, int):
        return raw
    raise ConfigError(key, f"expected an integer, got {raw!r}")


def _p(raw, key: str) -> float:
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity"):
        return INF
    try:
        p = float(parse_number(raw))
    except (ValueError, TypeError) as e:
        raise ConfigError(key, str(e)) from None
    if not p >= 1:
        raise ConfigError(key, f"p must be >= 1, got {p}")
    return p


def _turns(raw, key: str) -> Fraction:
    try:
        v = parse_number(raw)
    except ValueError as e:
        raise ConfigError(key, str(e)) from None
    if isinstance(v, complex):
        raise ConfigError(key, "angles are real")
    return Fraction(v)


def _parse_F(raw: dict, fld: Field) -> LineUnion:
    """Real-mode keys (arcs, lines) or complex-mode keys (disks, slopes, vertical).

    A real-mode F is allowed in a complex experiment (complexified lines).
    """
    if not isinstance(raw, dict):
        raise ConfigError("F", "expected a table")
    real_mode = bool(set(raw) & {"arcs", "lines"})
    if not real_mode and fld is Field.REAL:
        raise ConfigError("F", "a real experiment needs arcs/lines")
    try:
        if real_mode:
            arcs = []
            for i, a in enumerate(raw.get("arcs", [])):
                if not isinstance(a, list) or len(a) != 2:
                    raise ConfigError(f"F.arcs[{i}]", "arcs are [lo, hi] pairs in turns")
                arcs.append((_turns(a[0], f"F.arcs[{i}][0]"), _turns(a[1], f"F.arcs[{i}][1]")))
            lines = [_turns(a, f"F.lines[{i}]") for i, a in enumerate(raw.get("lines", []))]
            extra = set(raw) - {"arcs", "lines"}
            if extra:
                raise ConfigError(f"F.{sorted(extra)[0]}", "not a real-mode key")
            return LineUnion.real(arcs, lines)
        disks = []
        for i, d in enumerate(raw.get("disks", [])):
            if not isinstance(d, list) or len(d) != 2:
                raise ConfigError(f"F.disks[{i}]", "disks are [center, radius]")
            disks.append((complex(parse_number(d[0])), float(parse_number(d[1]))))
        slopes = [complex(parse_number(s)) for s in raw.get("slopes", [])]
        extra = set(raw) - {"disks", "slopes", "vertical"}
        if extra:
            raise ConfigError(f"F.{sorted(extra)[0]}", "not a complex-mode key")
        return LineUnion.complex(disks, slopes, bool(raw.get("vertical", False)))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("F", str(e)) from None


def _parse_vector(raw: dict, i: int, fld: Field) -> tuple[str, SparseVector]:
    key = f"vectors[{i}]"
    if not isinstance(raw, dict):
        raise ConfigError(key, "expected a table")
    name = str(raw.get("name", f"v{i}"))
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigError(f"{key}.name", f"unsafe file name {name!r}")
    entries = {}
    for j, e in enumerate(raw.get("entries", [])):
        ek = f"{key}.entries[{j}]"
        if not isinstance(e, list) or len(e) != 2:
            raise ConfigError(ek, "entries are [index, value] pairs")
        idx = _int(e[0], f"{ek}[0]")
        if idx < 1:
            raise ConfigError(f"{ek}[0]", "indices start at 1")
        try:
            v = parse_number(e[1])
        except ValueError as err:
            raise ConfigError(f"{ek}[1]", str(err)) from None
        if fld is Field.REAL and isinstance(v, complex):
            raise ConfigError(f"{ek}[1]", "complex value in a real experiment")
        entries[idx] = complex(v) if fld is Field.COMPLEX else float(v)
    return name, SparseVector(entries, fld)


def parse_config(raw: dict[str, Any]) -> ExperimentConfig:
    known = {"field", "p", "operator", "F", "depth", "strict", "vectors", "horizon", "trunc", "seed",
             "output_dir", "epsilon", "n_forms", "moduli", "suites"}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown key")
    try:
        fld = Field.parse(raw.get("field", "complex"))
    except ValueError as e:
        raise ConfigError("field", str(e)) from None
    op = raw.get("operator", "diagonal")
    if op not in OPERATORS:
        raise ConfigError("operator", f"expected one of {OPERATORS}")
    if op == "rotation" and fld is not Field.REAL:
        raise ConfigError("field", "the rotation operator is real")
    p = _p(raw.get("p", 2), "p")
    depth = _int(raw.get("depth", 6), "depth")
    min_depth = 2 if op == "hajek_smith" else 1 if op == "backward_shift" else 3
    if depth < min_depth:
        raise ConfigError("depth", f"must be >= {min_depth} for {op}")
    if op == "backward_shift":
        if p == INF:
            raise ConfigError("p", "backward shift needs finite p")
        F = None
    else:
        if "F" not in raw:
            raise ConfigError("F", "missing")
        F = _parse_F(raw["F"], Field.REAL if op == "rotation" else fld)
    horizon = raw.get("horizon", "windows")
    if horizon != "windows":
        if not isinstance(horizon, list):
            raise ConfigError("horizon", 'expected "windows" or a list of t')
        horizon = [_int(t, f"horizon[{i}]") for i, t in enumerate(horizon)]
        if any(t < 0 for t in horizon):
            raise ConfigError("horizon", "t values must be >= 0")
    vecs = raw.get("vectors", [])
    if not isinstance(vecs, list):
        raise ConfigError("vectors", "expected an array of tables")
    vfield = Field.REAL if op == "rotation" else fld
    vectors = [_parse_vector(v, i, vfield) for i, v in enumerate(vecs)]
    names = [n for n, _ in vectors]
    if len(set(names)) != len(names):
        raise ConfigError("vectors", "vector names must be unique")
    eps = raw.get("epsilon")
    if eps is not None:
        eps = float(parse_number(eps))
        if eps <= 0:
            raise ConfigError("epsilon", "must be positive")
    moduli = raw.get("moduli")
    if moduli is not None:
        moduli = [_int(m, f"moduli[{i}]") for i, m in enumerate(moduli)]
    suites = raw.get("suites", [])
    if not isinstance(suites, list):
        raise ConfigError("suites", "expected a list of module names")
    from .suites import SUITES
    for i, s in enumerate(suites):
        if s not in SUITES:
            raise ConfigError(f"suites[{i}]", f"unknown suite {s!r}")
    n_forms = raw.get("n_forms")
    return ExperimentConfig(
        field=fld, p=p, operator=op, F=F, depth=depth,
        strict=bool(raw.get("strict", True)), vectors=vectors, horizon=horizon,
        trunc=_int(raw.get("trunc", 16), "trunc"), seed=_int(raw.get("seed", 0), "seed"),
        output_dir=str(raw.get("output_dir", "out")), epsilon=eps,
        n_forms=None if n_forms is None else _int(n_forms, "n_forms"),
        moduli=moduli, suites=list(suites))


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError("<file>", str(e)) from None
    return parse_config(raw)


# --- operators ----------------------------------------------------------------

@dataclass(frozen=True)
class BackwardShift:
    p: float
    dim: int


def build_operator(cfg: ExperimentConfig):
    if cfg.operator == "backward_shift":
        return BackwardShift(cfg.p, cfg.depth)
    n_forms = cfg.n_forms or cfg.depth + 1
    forms = make_forms(cfg.F, max(n_forms, cfg.depth))
    if cfg.operator == "hajek_smith":
        return HSOperator(build_hs_layout(forms, cfg.depth, cfg.p), forms)
    if cfg.moduli is not None:
        sched = ModulusSchedule.from_moduli(cfg.moduli, strict=cfg.strict)
    else:
        sched = build_schedule(forms, cfg.depth, cfg.epsilon, cfg.p)
    cls = RotationOperator if cfg.operator == "rotation" else DiagonalOperator
    return cls(sched, forms)


def window_times(op) -> list[int]:
    """Sample times: each window's ends and midpoint, plus the recurrence times."""
    ts = {0}
    if isinstance(op, BackwardShift):
        return list(range(op.dim + 1))
    if isinstance(op, HSOperator):
        L = op.layout
        for k in range(1, op.depth + 1):
            lo, hi = L.window(k)
            ts.update((lo, (lo + hi) // 2, hi, L.period(k)))
        return sorted(ts)
    s = op.schedule
    first = 2 if isinstance(op, RotationOperator) else 3
    for k in range(first, op.trunc_cap + 1):
        a, b = s.modulus(k - 1), s.modulus(k)
        ts.update((a, (a + b) // 2, b, 2 * a))
    return sorted(ts)


def orbit_row(op, x: SparseVector, t: int, cfg: ExperimentConfig) -> tuple[int, float, float, float, float]:
    if isinstance(op, BackwardShift):
        y = backward_shift_apply(x, t, op.p)
        n, d = lp_norm(y, op.p), lp_norm(y - x, op.p)
        return t, n, n, d, d
    if isinstance(op, HSOperator):
        K = op.depth
        orb = op.iterate(x, t, K)
        a, b = orb.norm(cfg.p), orb.norm(cfg.p, distance_to_start=True)
        return t, a.lo, a.hi, b.lo, b.hi
    st = op.iterate_closed_form(x, t, min(cfg.trunc, op.trunc_cap))
    a = orbit_norm(st, cfg.p)
    b = orbit_norm(st, cfg.p, distance_to_start=True)
    return t, a.lo, a.hi, b.lo, b.hi


def format_csv(rows) -> str:
    lines = [CSV_HEADER]
    for t, a, b, c, d in rows:
        lines.append(f"{t},{a!r},{b!r},{c!r},{d!r}")
    return "\n".join(lines) + "\n"


# --- classification -------------------------------------------------------------

@dataclass
class Classification:
    label: str  # "A" (orbit norm -> infinity) or "B" (recurrent)
    distance: float
    evidence: list[dict] = field(default_factory=list)
    observed: str = "inconclusive"

    @property
    def agrees(self) -> bool:
        return (self.label, self.observed) in (("A", "diverging"), ("B", "recurrent"))


def classify_vector(x: SparseVector, op, cfg: ExperimentConfig | None = None) -> Classification:
    """Prediction from Px in F, with certified evidence from the operator."""
    p = cfg.p if cfg else 2.0
    trunc = cfg.trunc if cfg else 16
    if isinstance(op, BackwardShift):
        return Classification("n/a", 0.0, observed="n/a")
    cls = classify_base_point(project_P(x), op.F)
    if isinstance(op, HSOperator):
        from .hajek_smith import hs_divergence_recurrence_report
        rep = hs_divergence_recurrence_report(x, op.layout, op.forms, trunc_blocks=op.depth, p=p)
        ev = [{"k": r.k, "t": str(r.t), "bound": r.bound} for r in rep.records]
        out = Classification(rep.predicted, cls.distance, ev)
        bounds = rep.bounds
    elif cls.in_f:
        trace = op.recurrence_trace(x, trunc_K=max(trunc, op.trunc_cap), p=p)
        ev = [{"k": r.k, "t": str(r.t), "bound": r.bound} for r in trace]
        out = Classification("B", 0.0, ev)
        bounds = [r.bound for r in trace]
    else:
        s = op.schedule
        first = 2 if isinstance(op, RotationOperator) else 3
        ev = []
        for k in range(first, op.trunc_cap + 1):
            t = s.modulus(k)
            ev.append({"k": k, "t": str(t), "bound": op.divergence_lower_bound(x, k, t, p)})
        out = Classification("A", cls.distance, ev)
        bounds = [e["bound"] for e in ev]
    if out.label == "B":
        if bounds and min(bounds) < RECURRENCE_TARGET:
            out.observed = "recurrent"
    else:
        tail = bounds[len(bounds) // 2:]
        if tail and tail[-1] > 0 and all(b2 >= b1 for b1, b2 in zip(tail, tail[1:])):
            out.observed = "diverging"
    return out


# --- runner ---------------------------------------------------------------------

def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)


@dataclass
class RunResult:
    files: list[Path]
    checks_passed: bool
    classifications: dict[str, Classification]


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def run_experiment(cfg: ExperimentConfig, suite_names: list[str] | None = None,
                   out_dir: Path | None = None) -> RunResult:
    from .suites import run_suites

    out_dir = resolve_output_dir(cfg) if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str):
        path = out_dir / name
        written.append(path)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)

    try:
        op = build_operator(cfg)
        ts = window_times(op) if cfg.horizon == "windows" else list(cfg.horizon)
        classes = {}
        for name, x in cfg.vectors:
            emit(f"orbit_{name}.csv", format_csv(orbit_row(op, x, t, cfg) for t in ts))
            classes[name] = classify_vector(x, op, cfg)
        if cfg.vectors:
            payload = {n: {"predicted": c.label, "observed": c.observed, "agrees": c.agrees,
                           "distance": c.distance,
                           "evidence": [{k: _json_safe(v) for k, v in e.items()} for e in c.evidence]}
                       for n, c in classes.items()}
            emit("classification.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
        names = suite_names if suite_names is not None else cfg.suites
        results = run_suites(names, seed=cfg.seed)
        lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
        emit("lemma_suite.txt", "\n".join(lines) + ("\n" if lines else ""))
        return RunResult(written, all(r.passed for r in results), classes)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
