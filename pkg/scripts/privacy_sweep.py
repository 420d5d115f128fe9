"""Privacy/utility sweep: balanced accuracy across budgets, feature counts and bounds."""
import argparse
import time

from procattest import privacy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=1, help="repeat the sweep for seeds 0..S-1")
    ap.add_argument("--sessions", type=int, default=4000)
    ap.add_argument("--csv", help="write all rows here")
    args = ap.parse_args()
    rows = []
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        report = privacy.simulate_privacy_utility(privacy.default_sweep(seed, args.sessions))
        print(f"seed {seed} ({time.perf_counter() - t0:.2f} s)")
        print(report.summary())
        for name, ok in privacy.check_orderings(report).items():
            print(f"  {'holds' if ok else 'fails'}: {name}")
        rows += report.rows
    print(f"naive acceptance (m=12, 3 sigma): {privacy.naive_acceptance(privacy.default_population(12)):.4f}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(privacy.SimulationReport(rows).to_csv())


if __name__ == "__main__":
    main()
