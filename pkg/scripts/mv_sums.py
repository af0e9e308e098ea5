"""Partial sums of 1/||R^k||_2 on a diagonal truncation, against T/2.

The sums grow, but sublinearly at these horizons.
"""
import argparse
from fractions import Fraction

from wilddyn.core import LineUnion
from wilddyn.diagonal import DiagonalOperator, build_schedule
from wilddyn.separating import make_forms
from wilddyn.spectral import mv_partial_sums

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=12)
ap.add_argument("--T", type=int, default=1000)
args = ap.parse_args()

forms = make_forms(LineUnion.real([(Fraction(0), Fraction(1, 16))]), args.n + 1)
op = DiagonalOperator(build_schedule(forms, args.n), forms)
s = mv_partial_sums(op.truncation(args.n).matrix, args.T)
print("T,sum,T/2")
for T in (10, 50, 100, 250, 500, 1000):
    if T <= args.T:
        print(f"{T},{s[T - 1]:.4f},{T / 2}")
