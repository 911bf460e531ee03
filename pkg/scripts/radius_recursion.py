"""Radius recursion r_{h+1} = C lam^{s_h} (r_h + r_h^K) under several epoch schedules."""
import argparse
import math

from jetconj.basin import radius_recursion

SCHEDULES = {
    "c*K^h": lambda K: (lambda h: 4 * K ** h),
    "K^h": lambda K: (lambda h: K ** h),
    "h": lambda K: (lambda h: h),
    "h^2": lambda K: (lambda h: h * h),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=float, default=2.0)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--C", type=float, default=1.0)
    ap.add_argument("--horizon", type=int, default=80)
    args = ap.parse_args()
    print(f"{'schedule':>8} {'r0':>8} {'verdict':>14} {'epochs':>6} {'log10 r_end':>12}")
    for name, make in SCHEDULES.items():
        for r0 in (1.0, 1e3, 1e6, 1e10):
            rec = radius_recursion(args.C, args.lam, args.K, make(args.K), r0, args.horizon, big=math.inf)
            print(f"{name:>8} {r0:8.0e} {rec.verdict:>14} {rec.epochs:>6} {rec.log_r[-1] / math.log(10):12.4g}")


if __name__ == "__main__":
    main()
