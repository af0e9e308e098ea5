"""Sharp vs coarse recurrence bounds at t = 2 m_{k-1} for a vector over a net point."""
import argparse
import math
from fractions import Fraction

from wilddyn.core import Field, LineUnion, SparseVector
from wilddyn.diagonal import DiagonalOperator, build_schedule
from wilddyn.separating import make_forms

ap = argparse.ArgumentParser()
ap.add_argument("--depth", type=int, default=24)
ap.add_argument("--net-index", type=int, default=9, help="Px = u_n")
args = ap.parse_args()

forms = make_forms(LineUnion.real([(Fraction(0), Fraction(1, 16))]), args.depth + 1)
op = DiagonalOperator(build_schedule(forms, args.depth), forms)
u = forms.u[args.net_index - 1]
x = SparseVector({1: u.c1, 2: u.c2}, Field.COMPLEX)
print("k,log10_t,sharp,coarse")
for est in op.recurrence_trace(x, args.depth, trunc_K=args.depth):
    print(f"{est.k},{math.log10(est.t):.1f},{est.bound:.3e},{est.coarse_bound:.3e}")
