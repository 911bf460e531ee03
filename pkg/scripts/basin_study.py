"""Convergence counts of random triangular sequences with and without permutation interleaving."""
import argparse
import time

from jetconj.basin import SamplingSpec, basin_scan, random_interleaved, sample_points
from jetconj.config import derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("--radii", type=float, nargs="+", default=[1.0, 10.0, 100.0, 1000.0])
    args = ap.parse_args()
    seqs = {"interleaved": random_interleaved(args.d, args.seed, n_epochs=args.epochs),
            "plain": random_interleaved(args.d, args.seed, n_epochs=0)}
    for radius in args.radii:
        pts = sample_points(args.d, SamplingSpec(radius, n_grid=0, n_far=args.points, far_radius=radius,
                                                 seed=derive_seed(args.seed, "sampling")))
        for name, seq in seqs.items():
            t0 = time.perf_counter()
            rep = basin_scan(seq, pts)
            print(f"radius {radius:8.1f} {name:>11}: {rep.count('converged')}/{rep.n_points} converged, "
                  f"{rep.count('diverged')} diverged, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
