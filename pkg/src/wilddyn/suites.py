"""Property suites shared by the CLI (`wilddyn suite`) and tests/test_acceptance.py.

Each check returns a CheckResult; ``ACCEPTANCE`` lists checks 1-9 in order.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Field, LineUnion, PlanePoint, SparseVector, classify_base_point, lp_norm, project_P

# the reference F: one arc of line angles [0, 1/16] turn
REF_ARC = (Fraction(0), Fraction(1, 16))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name: str):
    def wrap(fn):
        def run(seed: int = 0) -> CheckResult:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(seed)
            except Exception as e:  # a crash is a failed check, reported as such
                ok, detail = False, f"raised {type(e).__name__}: {e}"
            return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        run.__name__ = fn.__name__
        run.check_name = name
        return run
    return wrap


def _ref_forms(n: int):
    from .separating import make_forms
    return make_forms(LineUnion.real([REF_ARC]), n)


# --- acceptance 1-9 -------------------------------------------------------------

@_timed("1 geometric sums")
def acceptance_1(seed: int):
    from .diagonal import build_schedule, lambda_kt
    rng = np.random.default_rng(seed)
    s = build_schedule(_ref_forms(16), 8)
    zeros = sum(lambda_kt(k, 2 * s.modulus(n), s) != 0 for n in range(3, 9) for k in range(3, n + 1))
    over = 0
    mmax = s.modulus(8)
    for _ in range(10_000):
        k = int(rng.integers(3, 9))
        t = int(rng.integers(0, 4 * mmax))
        if abs(lambda_kt(k, t, s)) > t * (1 + 1e-12):
            over += 1
    under = 0
    for k in range(3, 7):
        lo, hi = s.modulus(k - 1), s.modulus(k)
        for t in rng.integers(lo, hi + 1, size=1000):
            if abs(lambda_kt(k, int(t), s)) < 2 / math.pi * lo * (1 - 1e-12):
                under += 1
    ok = zeros == 0 and over == 0 and under == 0
    return ok, f"nonzero at 2m_n: {zeros}, |lambda|>t: {over}/10000, window minorant failures: {under}/4000"


def _oracle_run(op, x: SparseVector, T: int, checkpoints, J_lo: int, J_hi: int, p: float = 2.0):
    from .diagonal import orbit_norm
    worst_gap, worst_entry = 0.0, 0.0
    y = x
    for t in range(1, T + 1):
        y, _ = op.apply_R(y, J_hi)
        if t not in checkpoints:
            continue
        st = op.iterate_closed_form(x, t, J_lo)
        iv = orbit_norm(st, p, auto=False)
        n = lp_norm(y, p)
        gap = max(iv.lo - 1e-9 * t - n, n - iv.hi - 1e-9 * t, 0.0)
        worst_gap = max(worst_gap, gap)
        z = st.materialize(J_hi)
        diff = lp_norm(z - y, INF_P)
        worst_entry = max(worst_entry, diff / (1e-9 * t * max(1.0, lp_norm(x, 2))))
    return worst_gap, worst_entry


INF_P = math.inf


@_timed("2 oracle equivalence")
def acceptance_2(seed: int):
    from .diagonal import DiagonalOperator, build_schedule
    from .rotation import RotationOperator
    rng = np.random.default_rng(seed)
    forms = _ref_forms(64)
    s = build_schedule(forms, 24)
    ops = {"complex": DiagonalOperator(s, forms), "real": RotationOperator(s, forms)}
    checkpoints = set(range(1, 51)) | set(int(t) for t in np.linspace(50, 1000, 40))
    bad = 0
    n = 0
    for kind, op in ops.items():
        for _ in range(50):
            ent = {}
            for i in [1, 2] + list(rng.choice(np.arange(3, 20), size=3, replace=False)):
                v = rng.uniform(-1, 1)
                if kind == "complex":
                    v = complex(v, rng.uniform(-1, 1))
                ent[int(i)] = v
            x = SparseVector(ent, Field.COMPLEX if kind == "complex" else Field.REAL)
            gap, entry = _oracle_run(op, x, 1000, checkpoints, J_lo=6, J_hi=24)
            n += 1
            if gap > 0 or entry > 1:
                bad += 1
    return bad == 0, f"{n - bad}/{n} vectors agree (t <= 1000, closed form at trunc 6 vs iterated at 24)"


def _a_vector(rng, cplx: bool) -> SparseVector:
    phi = math.radians(rng.uniform(96.25, 106.25))
    z = rng.uniform(0.5, 2.0)
    if cplx:
        z = z * complex(math.cos(rng.uniform(0, 2 * math.pi)), math.sin(rng.uniform(0, 2 * math.pi)))
    ent = {1: z * math.cos(phi), 2: z * math.sin(phi)}
    idx = rng.choice(np.arange(3, 11), size=3, replace=False)
    vals = rng.uniform(-1, 1, size=3)
    vals *= 0.2 * abs(z) / np.linalg.norm(vals)
    for i, v in zip(idx, vals):
        ent[int(i)] = float(v)
    return SparseVector(ent, Field.COMPLEX if cplx else Field.REAL)


def _b_vector(rng, forms, cplx: bool) -> tuple[SparseVector, int]:
    p = int(rng.choice(np.arange(7, 22, 2)))
    u = forms.u[p - 1]
    z = rng.uniform(0.2, 1.0)
    if cplx:
        z = z * complex(math.cos(rng.uniform(0, 2 * math.pi)), math.sin(rng.uniform(0, 2 * math.pi)))
    ent = {1: z * u.c1, 2: z * u.c2}
    for i in rng.choice(np.arange(3, p), size=2, replace=False):
        ent[int(i)] = float(rng.uniform(-0.3, 0.3))
    return SparseVector(ent, Field.COMPLEX if cplx else Field.REAL), p


@_timed("3 dichotomy at desk scale")
def acceptance_3(seed: int):
    from .diagonal import DiagonalOperator, build_schedule, orbit_norm
    rng = np.random.default_rng(seed)
    forms = _ref_forms(64)
    s = build_schedule(forms, 24)
    op = DiagonalOperator(s, forms)
    a_bad, b_bad = [], []
    finals = []
    for j in range(20):
        x = _a_vector(rng, cplx=True)
        c = project_P(x)
        d = classify_base_point(c, forms.F).distance
        nx = lp_norm(x, 2)
        lbs = []
        ok = d >= 0.1
        for k in range(3, 9):
            lo, hi = s.modulus(k - 1), s.modulus(k)
            lb = op.divergence_lower_bound(x, k, hi)
            lbs.append(lb)
            ok &= lb >= 2 / math.pi * math.sqrt(k) * d - nx - 1e-12
            for t in (lo, (lo + hi) // 2, hi):
                ok &= orbit_norm(op.iterate_closed_form(x, t, 24)).lo >= lb - 1e-9
        ok &= lbs[0] > 0 and all(b > a for a, b in zip(lbs, lbs[1:]))
        finals.append(lbs[-1])
        if not ok:
            a_bad.append(j)
    best = []
    for j in range(20):
        x, p = _b_vector(rng, forms, cplx=True)
        trace = op.recurrence_trace(x, n_max=24, trunc_K=24)
        m = min(r.bound for r in trace)
        best.append(m)
        if not m < 1e-3:
            b_bad.append(j)
    ok = not a_bad and not b_bad
    return ok, (f"A: {20 - len(a_bad)}/20 positive increasing (min final bound {min(finals):.3f}); "
                f"B: {20 - len(b_bad)}/20 below 1e-3 (worst {max(best):.2e})")


@_timed("4 bump norms exhaustive")
def acceptance_4(seed: int):
    from .hajek_smith import bump_norm_check
    bad, n = [], 0
    for m in (1, 2, 3, 5):
        for H in range(4 * m, 65, 2):
            for p in (1.0, 1.5, 2.0, 3.0, math.inf):
                n += 1
                if not bump_norm_check(m, H, p).passed:
                    bad.append((m, H, p))
    return not bad, f"{n - len(bad)}/{n} (m, H, p) cases clean" + (f"; failures {bad[:5]}" if bad else "")


@_timed("5 HS layout algebra")
def acceptance_5(seed: int):
    import random

    from .hajek_smith import build_hs_layout
    rng = random.Random(seed)
    forms = _ref_forms(16)
    errs = []
    for p in (1.0, 2.0, 3.0, math.inf):
        L = build_hs_layout(forms, 6, p)
        a, m, H = L.a, L.m, L.H
        for k in range(6):
            if (1 + a[k + 1]) % (1 + a[k]):
                errs.append(f"divisibility a at k={k + 1}")
            if H[k] != 2 * (m[k] + m[k + 1]):
                errs.append(f"H_{k + 1} formula")
            if k < 5 and (H[k + 1] % H[k] or H[k + 1] * (1 + a[k + 1]) != H[k] * a[k + 1] * (1 + a[k + 2])):
                errs.append(f"H_{k + 1} | H_{k + 2}")
        for k in range(1, 7):
            mk, Hk = L.modulus(k), L.period(k)
            if abs(L.v_norm(k, 2 * mk) - 1) > 1e-12:
                errs.append(f"eps_{k} p={p}")
            lo, hi = L.window(k)
            for t in [rng.randint(lo, hi) for _ in range(20)] + [lo, hi]:
                if abs(L.v_norm(k, int(t)) - 1) > 1e-12:
                    errs.append(f"plateau k={k} t={t} p={p}")
            for t in list(range(1, 40)) + [rng.randint(1, 2 * Hk) for _ in range(40)]:
                if L.v_norm(k, t) > 2 * t / mk * (1 + 1e-12):
                    errs.append(f"2t/m_k k={k} t={t} p={p}")
    return not errs, "all layout identities hold for k <= 6" if not errs else "; ".join(errs[:6])


@_timed("6 spectral")
def acceptance_6(seed: int):
    from .diagonal import DiagonalOperator, build_schedule
    from .hajek_smith import HSLayout, build_hs_layout
    from .spectral import (diagonal_spectrum, eigenvalues, hs_block_spectrum, hs_truncation, match_distance,
                           operator_norm, prajitura_perturbation, spectral_radius)
    forms = _ref_forms(160)
    s = build_schedule(forms, 128)
    T = DiagonalOperator(s, forms).truncation(128)
    notes = []
    d_err = match_distance(eigenvalues(T.matrix), diagonal_spectrum(s, 128))
    ok = d_err <= 1e-10
    r_diag = spectral_radius(T.matrix)
    ok &= abs(r_diag - 1) <= 1e-9
    notes.append(f"diag eig err {d_err:.1e}")
    Hs = sorted(set([2, 6, 24, 48, 96, 192, 384, 512] + list(range(4, 513, 28))))
    roots_err = max(hs_block_spectrum(H).error for H in Hs)
    ok &= roots_err <= 1e-9
    notes.append(f"roots err {roots_err:.1e} over {len(Hs)} H")
    hs_r = [spectral_radius(hs_truncation(build_hs_layout(forms, 3), forms, 1).matrix),
            spectral_radius(hs_truncation(HSLayout.from_a([1, 3, 7, 15]), forms, 2).matrix)]
    ok &= all(abs(r - 1) <= 1e-9 for r in hs_r)
    for eps in (0.1, 0.5):
        Re = prajitura_perturbation(T, eps, 1.0)
        ok &= spectral_radius(Re.matrix) >= 1 + 2 * eps - 1e-9
        ok &= abs(operator_norm(T.matrix - Re.matrix, 2) - 2 * eps) <= 1e-12
    notes.append(f"r(R)={r_diag:.12f}, r(R_HS) in [{min(hs_r):.12f}, {max(hs_r):.12f}]")
    return ok, "; ".join(notes)


@_timed("7 separating forms")
def acceptance_7(seed: int):
    from .separating import best_prefix_values
    rng = np.random.default_rng(seed)
    N = 2000
    forms = _ref_forms(N)
    F = forms.F
    ns = np.arange(1, N + 1)
    norm_err = max(abs(forms.form(n).norm - n ** 0.5) for n in range(1, N + 1))
    rec_bad = 0
    for _ in range(100):
        th = Fraction(REF_ARC[0]) + (REF_ARC[1] - REF_ARC[0]) * Fraction(int(rng.integers(0, 10 ** 6)), 10 ** 6)
        r = rng.uniform(0.1, 3) * rng.choice([-1, 1])
        a = 2 * math.pi * float(th)
        c = PlanePoint(r * math.cos(a), r * math.sin(a))
        if not classify_base_point(c, F).in_f:
            rec_bad += 1
            continue
        best = best_prefix_values(forms, c, N)
        rec_bad += int(np.any(best > forms.k_net * ns ** -0.5 * c.norm()))
    div_bad = 0
    for _ in range(100):
        a = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(0.1, 3)
        c = PlanePoint(r * math.cos(a), r * math.sin(a))
        cls = classify_base_point(c, F)
        if cls.in_f:
            continue
        vals = np.abs(forms.values(c, N))
        div_bad += int(np.any(vals < ns ** 0.5 * cls.distance * (1 - 1e-9)))
    ok = norm_err <= 1e-12 and rec_bad == 0 and div_bad == 0
    return ok, (f"max | ||f_n|| - sqrt(n) | = {norm_err:.1e}; recurrence failures {rec_bad}/100; "
                f"divergence failures {div_bad}/100 (K_net = {forms.k_net:.3f})")


@_timed("8 nuclearity with scaled schedule")
def acceptance_8(seed: int):
    from .diagonal import DiagonalOperator, build_schedule
    forms = _ref_forms(160)
    s = build_schedule(forms, 128, epsilon=0.01)
    op = DiagonalOperator(s, forms)
    bound = op.nuclear_norm_bound()
    A = op.truncation(128).matrix
    sv = float(np.linalg.norm(A - np.eye(128), 2))
    return bound <= 0.01 and sv <= 0.01, f"nuclear bound {bound:.5f}, ||R - I||_2 (n=128) {sv:.5f}, m_2 = {s.modulus(2)}"


DETERMINISM_CONFIGS = [
    {"field": "complex", "p": 2, "operator": "diagonal", "depth": 6, "trunc": 6, "seed": 3,
     "F": {"arcs": [["0", "1/16"]]},
     "vectors": [{"name": "off", "entries": [[1, 0.0], [2, 1.0]]},
                 {"name": "on", "entries": [[1, 1.0], [4, "1/3"]]}]},
    {"field": "real", "p": "inf", "operator": "rotation", "depth": 5, "trunc": 5,
     "F": {"arcs": [["0", "1/16"]]},
     "vectors": [{"name": "a", "entries": [[2, 1.0], [5, -0.5]]}]},
    {"field": "real", "p": 3, "operator": "hajek_smith", "depth": 3,
     "F": {"lines": ["0"]},
     "vectors": [{"name": "h", "entries": [[1, 1.0], [2, 1.0], [7, 0.25]]}]},
]


@_timed("9 determinism")
def acceptance_9(seed: int):
    from .harness import parse_config, run_experiment
    mism = []
    for i, raw in enumerate(DETERMINISM_CONFIGS):
        dumps = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                cfg = parse_config(dict(raw, seed=seed))
                res = run_experiment(cfg, suite_names=[], out_dir=Path(tmp))
                dumps.append({p.name: p.read_bytes() for p in res.files})
        if dumps[0] != dumps[1] or not dumps[0]:
            mism.append(i)
    return not mism, f"{len(DETERMINISM_CONFIGS) - len(mism)}/{len(DETERMINISM_CONFIGS)} configs byte-identical"


ACCEPTANCE = [acceptance_1, acceptance_2, acceptance_3, acceptance_4, acceptance_5,
              acceptance_6, acceptance_7, acceptance_8, acceptance_9]


# --- module checks beyond the acceptance list --------------------------------------

@_timed("core: norms and scaling")
def check_core(seed: int):
    rng = np.random.default_rng(seed)
    err = 0.0
    for p in (1.0, 1.5, 2.0, 3.0, math.inf):
        v = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        ref = np.linalg.norm(v, ord=p)
        err = max(err, abs(lp_norm(SparseVector.from_dense(v, Field.COMPLEX), p) - ref) / ref)
    F = LineUnion.real([REF_ARC])
    flips = 0
    for _ in range(200):
        c = PlanePoint(*rng.standard_normal(2))
        flips += classify_base_point(c, F).in_f != classify_base_point(c.scaled(2.0), F).in_f
    return err < 1e-12 and flips == 0, f"lp rel err {err:.1e}, scaling flips {flips}"


@_timed("rotation: blocks and mu/lambda bridge")
def check_rotation(seed: int):
    from .diagonal import build_schedule, lambda_kt
    from .rotation import RotationBlock, mu_kt, mu_vector
    rng = np.random.default_rng(seed)
    s = build_schedule(_ref_forms(16), 8)
    det_err = max(abs(np.linalg.det(np.array(RotationBlock(k, s.modulus(k)).matrix())) - 1) for k in range(2, 9))
    bridge = 0
    for _ in range(10_000):
        k = int(rng.integers(2, 9))
        t = int(rng.integers(0, 4 * s.modulus(8)))
        lam = abs(lambda_kt(k, t, s)) if k > 2 else abs(lambda_kt(k, t, s))
        c, sn = mu_kt(k, t, s)
        mu2 = math.hypot(c, sn)
        if k > 2 and abs(mu2 - lam) > 1e-10 * max(1.0, lam):
            bridge += 1
        mu = mu_vector(k, t, s)
        for p in (1.0, 3.0, math.inf):
            nm = lp_norm(mu, p)
            if not (mu2 / math.sqrt(2) * (1 - 1e-12) <= nm <= math.sqrt(2) * mu2 * (1 + 1e-12) + 1e-300):
                bridge += 1
            if nm > 2 * t * (1 + 1e-12) + 1e-300:
                bridge += 1
    zeros = sum(mu_kt(k, 2 * s.modulus(n), s) != (0.0, 0.0) for n in range(2, 9) for k in range(2, n + 1))
    return det_err <= 1e-14 and bridge == 0 and zeros == 0, \
        f"det err {det_err:.1e}, bridge failures {bridge}, nonzero mu at 2m_n {zeros}"


@_timed("spectral: backward shift and kernel probe")
def check_spectral_extras(seed: int):
    from .diagonal import DiagonalOperator, build_schedule
    from .spectral import backward_shift_demo, kernel_triviality_probe
    ok = all(backward_shift_demo(p, 40, seed).passed for p in (1.0, 2.0, 3.0))
    rep = backward_shift_demo(2.0, 200, seed)
    ok &= rep.partial_sums[-1] > 2 * rep.partial_sums[49]
    single = LineUnion.real(lines=[Fraction(0)])
    from .separating import make_forms
    f1 = make_forms(single, 16)
    probe = kernel_triviality_probe(DiagonalOperator(build_schedule(f1, 8), f1))
    ok &= probe.degenerate and probe.kernel_vector is not None and probe.residual == 0
    two = make_forms(LineUnion.real(lines=[Fraction(0), Fraction(1, 8)]), 32)
    pr = kernel_triviality_probe(DiagonalOperator(build_schedule(two, 12), two), PlanePoint(0.6, 0.8))
    sub = pr.subsequence(0.1)
    ok &= bool(sub) and all(r[2] >= r[3] * (1 - 1e-12) for r in pr.rows) and min(r[3] for r in sub) > 0.1
    return ok, f"backward shift ok, kernel probe subsequence length {len(sub)}"


SUITES: dict[str, list[Callable[..., CheckResult]]] = {
    "core": [check_core],
    "separating": [acceptance_7],
    "diagonal": [acceptance_1, acceptance_2, acceptance_3, acceptance_8],
    "rotation": [check_rotation],
    "hajek_smith": [acceptance_4, acceptance_5],
    "spectral": [acceptance_6, check_spectral_extras],
    "harness": [acceptance_9],
}


def run_suites(names: list[str] | None, seed: int = 0) -> list[CheckResult]:
    """Run the named suites (all when ``names`` is None), each check once."""
    names = list(SUITES) if names is None else names
    seen, out = set(), []
    for n in names:
        for chk in SUITES[n]:
            if chk in seen:
                continue
            seen.add(chk)
            out.append(chk(seed))
    return out
