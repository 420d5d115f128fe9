"""Setup, attest and verify one synthetic session, with a timing breakdown."""
import argparse
import random
import time

from procattest import circuit, evidence, privacy, session, snark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=120, help="checkpoints")
    ap.add_argument("--small", action="store_true", help="reduced circuit and 8 MiB work function")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.small:
        config = circuit.CircuitConfig(m=6, k=1, chain_length=64)
        swf = evidence.SWFParams(memory_cost=8 * evidence.MIB, time_cost=1, chain_length=64)
    else:
        config, swf = circuit.BASIC, None
    population = privacy.default_population(config.m)

    t0 = time.perf_counter()
    keys = snark.setup(config, seed=b"end-to-end")
    t1 = time.perf_counter()
    print(f"setup {t1 - t0:.1f} s ({keys.proving_key.num_constraints:,} constraints)", flush=True)

    stream = session.synthetic_stream(args.n, population, seed=args.seed)
    done = lambda i, n: print(f"\r  checkpoint {i}/{n}", end="", flush=True)  # noqa: E731
    tr = session.attest(stream, keys.proving_key, population, swf, rng=random.Random(args.seed), progress=done)
    t2 = time.perf_counter()
    print(f"\nattest {t2 - t1:.1f} s: " + ", ".join(f"{k} {v:.1f} s" for k, v in tr.timings.items()))

    bundle = snark.ProofBundle.from_bytes(tr.bundle.to_bytes())
    verdict = session.verify_bundle(keys.verifying_key, bundle, population=population)
    t3 = time.perf_counter()
    print(f"verify {t3 - t2:.1f} s: {'ACCEPT' if verdict.accepted else 'REJECT'}")
    print(f"attest + verify {t3 - t1:.1f} s (limit 600 s for 120 checkpoints)")


if __name__ == "__main__":
    main()
