"""Growth rate of the conjugating 2-jets against the bunching bound."""
import argparse
import math

import numpy as np

from jetconj.bunching import hypothesis_margin
from jetconj.config import derive_seed
from jetconj.jets import SolverConfig, growth_exponent, solve_2jet
from jetconj.pipeline import JetSequence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--horizon", type=int, default=80)
    ap.add_argument("--samples", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    k = growth_exponent(args.d)
    print(f"{'lam':>6} {'lam^2 M':>8} {'margin':>9} {'slope':>8} {'bound':>8}")
    for j in range(args.samples):
        lam = rng.uniform(0.4, 0.6)
        l2m = rng.uniform(1.0, 1.04)
        M = l2m / lam ** 2
        margin = hypothesis_margin(lam, M, args.d)
        if margin >= 0:
            continue
        f = JetSequence(args.d, lam, M, derive_seed(j, "growth"), mu=0.0, profile="extremal")
        norms = solve_2jet(f, SolverConfig(horizon=args.horizon)).h_norms()
        slope = float(np.polyfit(np.arange(len(norms)), np.log(norms), 1)[0])
        bound = k * math.log(1.05 * l2m) + 0.1
        print(f"{lam:6.3f} {l2m:8.4f} {margin:9.2e} {slope:8.4f} {bound:8.4f}")


if __name__ == "__main__":
    main()
