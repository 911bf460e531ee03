"""Log-norm slopes of the two support pieces of the conjugacy operator products.

Sweeps the contraction rate of a pinched linear sequence and reports the fitted
slopes of the pieces inside and outside the diagonal-resonance support.
"""
import argparse
import math
from pathlib import Path

from jetconj.polyspace import PinchedSequence, decomposition_bounds
from jetconj.reports import csv_text, write_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--horizon", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None, help="optional CSV path")
    args = ap.parse_args()
    rows = []
    for lam in (0.3, 0.4, 0.5, 0.6):
        M = 1 / lam ** 2
        b = decomposition_bounds(PinchedSequence(args.d, lam, M, seed=args.seed), args.horizon, fit_from=5)
        rows.append({"lam": lam, "M": M, "slope_m0": b.slope0, "slope_m1": b.slope1, "log_lam": math.log(lam)})
        print(f"lam={lam:.2f} M={M:.3f}  slope m0 {b.slope0:+.3f} (log lam {math.log(lam):+.3f})  "
              f"slope m1 {b.slope1:+.3f}")
    if args.out:
        write_text(csv_text(rows, list(rows[0])), args.out)


if __name__ == "__main__":
    main()
