"""Write a synthetic honest event stream (and a matching population file)."""
import argparse
from pathlib import Path

from procattest import privacy, session


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="stream JSON path")
    ap.add_argument("-n", type=int, default=120, help="number of checkpoint windows")
    ap.add_argument("-m", type=int, default=12, help="features per window")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--population", help="also write the population parameters here")
    args = ap.parse_args()

    population = privacy.default_population(args.m)
    stream = session.synthetic_stream(args.n, population, seed=args.seed)
    Path(args.out).write_text(stream.to_json())
    if args.population:
        Path(args.population).write_text(population.to_json())
    print(f"{args.n} windows of {args.m} features -> {args.out}")


if __name__ == "__main__":
    main()
