"""Print the exact bunching exponent and derived constants for small dimensions."""
import argparse

from jetconj.bunching import delta, easy_inequality, epsilon, rescale_exponent, stable_base


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dmax", type=int, default=5)
    args = ap.parse_args()
    print(f"{'d':>2} {'K':>4} {'delta':>8} {'rescale exp':>14} {'easy':>5}  epsilon")
    for d in range(2, args.dmax + 1):
        e = epsilon(d)
        text = str(e) if len(str(e)) < 40 else f"~{float(e):.3e}"
        print(f"{d:>2} {stable_base(d):>4} {str(delta(d)):>8} {rescale_exponent(d):>14} "
              f"{str(easy_inequality(d)):>5}  {text}")


if __name__ == "__main__":
    main()
