"""wilddyn command line: run / suite / spectrum / demo / plot-script."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .harness import BackwardShift, ConfigError, build_operator, load_config, run_experiment
from .suites import SUITES, run_suites


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run_experiment(cfg, suite_names=args.suite if args.suite else None)
    for f in res.files:
        print(f)
    for name, c in res.classifications.items():
        print(f"{name}: predicted {c.label}, observed {c.observed}")
    return 0 if res.checks_passed else 1


def _cmd_suite(args) -> int:
    names = [args.module] if args.module else None
    ok = True
    for r in run_suites(names, seed=args.seed):
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f}s): {r.detail}", flush=True)
        ok &= r.passed
    return 0 if ok else 1


def _cmd_spectrum(args) -> int:
    from .diagonal import DiagonalOperator
    from .hajek_smith import HSOperator
    from .spectral import (CYCLE_CAP, diagonal_spectrum, eigenvalues, hs_block_spectrum, match_distance,
                           root_union_gap, roots_nest, spectral_radius)

    cfg = load_config(args.config)
    op = build_operator(cfg)
    ok = True
    if isinstance(op, BackwardShift):
        from .spectral import backward_shift_matrix
        r = spectral_radius(backward_shift_matrix(min(op.dim, 256), op.p))
        print(f"backward shift truncation: nilpotent, spectral radius {r:.3e} (truncation-limited)")
        return 0
    if isinstance(op, HSOperator):
        L = op.layout
        for k in range(1, L.depth + 1):
            H = L.period(k)
            if H <= CYCLE_CAP:
                cs = hs_block_spectrum(H)
                ok &= cs.passed
                print(f"block {k}: H = {H}, roots-of-unity match error {cs.error:.2e} (exact structure, eigensolve)")
            else:
                print(f"block {k}: H = {H}, spectrum U_H by the permutation structure (not eigensolved)")
        nest = all(roots_nest(L.period(k), L.period(k + 1)) for k in range(1, L.depth)
                   if L.period(k + 1) <= 10 ** 6)
        divides = all(L.period(k + 1) % L.period(k) == 0 for k in range(1, L.depth))
        ok &= nest and divides
        print(f"nested root groups: {divides}; max gap of the union {root_union_gap(L.H):.3e}")
        return 0 if ok else 1
    n = min(op.trunc_cap, 128)
    T = op.truncation(n if isinstance(op, DiagonalOperator) and type(op) is DiagonalOperator else max(2, n // 2))
    eig = eigenvalues(T.matrix)
    r = spectral_radius(T.matrix)
    ok &= abs(r - 1) <= 1e-9
    if type(op) is DiagonalOperator:
        err = match_distance(eig, diagonal_spectrum(op.schedule, T.n))
        ok &= err <= 1e-10
        print(f"diagonal truncation n = {T.n}: eigenvalues vs lambda_k error {err:.2e} (triangular, exact)")
    print(f"{T.provenance}: spectral radius {r:.15f}")
    for z in sorted(eig, key=lambda z: -abs(np.angle(z)))[:8]:
        print(f"  {z.real:+.15f} {z.imag:+.15f}i")
    return 0 if ok else 1


def _cmd_demo(args) -> int:
    from .spectral import backward_shift_demo
    rep = backward_shift_demo(args.p, args.horizon)
    print(f"finitely supported vectors annihilated: {rep.annihilated}")
    print("t,||B^t e_(t+1)||,(t+1)^(1/p),sum 1/||B^k||")
    for t in range(rep.horizon):
        print(f"{t + 1},{rep.shift_norms[t]!r},{rep.predicted_norms[t]!r},{rep.partial_sums[t]!r}")
    return 0 if rep.passed else 1


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set logscale x
set xlabel 't'
set ylabel 'norm'
plot '{csv}' using ($1+1):2 with linespoints title 'norm lo', \\
     '' using ($1+1):3 with lines title 'norm hi', \\
     '' using ($1+1):4 with linespoints title 'dist0 lo', \\
     '' using ($1+1):5 with lines title 'dist0 hi'
"""


def _cmd_plot(args) -> int:
    sys.stdout.write(GNUPLOT.format(csv=Path(args.csv).as_posix()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wilddyn")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--suite", action="append", choices=sorted(SUITES), help="override the config's suites")
    r.set_defaults(fn=_cmd_run)
    s = sub.add_parser("suite", help="run property suites")
    s.add_argument("--module", choices=sorted(SUITES))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=_cmd_suite)
    sp = sub.add_parser("spectrum", help="spectral diagnostics for a config's operator")
    sp.add_argument("config")
    sp.set_defaults(fn=_cmd_spectrum)
    d = sub.add_parser("demo", help="demos")
    d.add_argument("which", choices=["backward-shift"])
    d.add_argument("--p", type=float, default=2.0)
    d.add_argument("--horizon", type=int, default=20)
    d.set_defaults(fn=_cmd_demo)
    pl = sub.add_parser("plot-script", help="gnuplot script for an orbit CSV")
    pl.add_argument("csv")
    pl.set_defaults(fn=_cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
