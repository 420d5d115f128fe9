"""Detection probability of fabricated chain links: formula against Monte Carlo."""
import argparse

import numpy as np

from procattest import privacy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-f", type=float, default=0.1, help="fabricated fraction")
    ap.add_argument("-k", type=int, default=2, help="samples per checkpoint")
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>4} {'formula':>10} {'monte carlo':>12} {'log10 miss':>11}")
    for n in (1, 5, 10, 20, 60, 120):
        exact = privacy.detection_probability(args.f, args.k, n)
        mc = privacy.simulate_detection(args.f, args.k, n, args.trials, rng)
        print(f"{n:>4} {exact:>10.6f} {mc:>12.6f} {privacy.miss_probability_log10(args.f, args.k, n):>11.3f}")


if __name__ == "__main__":
    main()
