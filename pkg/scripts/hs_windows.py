"""||R^t x|| across the plateau windows of the bump operator, off and on F."""
import argparse
from fractions import Fraction

from wilddyn.core import LineUnion, SparseVector
from wilddyn.hajek_smith import build_hs_layout, hs_divergence_recurrence_report
from wilddyn.separating import make_forms

ap = argparse.ArgumentParser()
ap.add_argument("--depth", type=int, default=5)
ap.add_argument("--p", type=float, default=2.0)
args = ap.parse_args()

forms = make_forms(LineUnion.real(lines=[Fraction(0)]), args.depth + 1)
L = build_hs_layout(forms, args.depth, args.p)
for label, x in (("off F", SparseVector({1: 1.0, 2: 1.0})), ("on F", SparseVector({1: 1.0}))):
    rep = hs_divergence_recurrence_report(x, L, forms)
    print(f"{label}: predicted {rep.predicted}")
    print("  kind,k,t,bound,norm_lo,norm_hi")
    for r in rep.records:
        print(f"  {r.kind},{r.k},{r.t:.3e},{r.bound:.4g},{r.norm_lo:.4g},{r.norm_hi:.4g}")
