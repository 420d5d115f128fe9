"""Constraint counts per family for the basic and extended circuits."""
import argparse
import time

from procattest import circuit

REFERENCE = {"basic": 77_259, "extended": 154_212}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--which", choices=["basic", "extended", "both"], default="both")
    args = ap.parse_args()
    names = ["basic", "extended"] if args.which == "both" else [args.which]
    for name in names:
        config = circuit.BASIC if name == "basic" else circuit.EXTENDED
        t0 = time.perf_counter()
        rep = circuit.constraint_count(config)
        dt = time.perf_counter() - t0
        print(f"{name} (m={config.m}, k={config.k}, N={config.chain_length}), synthesized in {dt:.1f} s")
        for label, n in rep.as_rows():
            print(f"  {label:<24} {n:>9,}")
        print(f"  {'variables':<24} {rep.variables:>9,}")
        print(f"  ratio to reference {REFERENCE[name]:,}: {rep.total / REFERENCE[name]:.3f}")


if __name__ == "__main__":
    main()
