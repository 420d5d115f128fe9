"""Single against batched verification of core proofs."""
import argparse
import random
import statistics
import time

from procattest import circuit, privacy, session, snark
from procattest.evidence import MIB, SWFParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", choices=["basic", "small"], default="small")
    ap.add_argument("-n", type=int, default=10, help="proofs per batch")
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    config = circuit.BASIC if args.config == "basic" else circuit.CircuitConfig(m=6, k=1, chain_length=64)
    population = privacy.default_population(config.m)
    print(f"setup {args.config} ...", flush=True)
    keys = snark.setup(config, seed=b"batch-benchmark")
    stream = session.synthetic_stream(args.n, population, seed=1)
    swf = SWFParams(chain_length=config.chain_length)
    if args.config == "small":
        swf = SWFParams(memory_cost=8 * MIB, time_cost=1, chain_length=config.chain_length)
    tr = session.attest(stream, keys.proving_key, population, swf, rng=random.Random(1))
    items = [(e.public_inputs, e.proof) for e in tr.bundle.entries]
    vk = keys.verifying_key
    single, batch = [], []
    for _ in range(args.repeats):
        t0 = time.perf_counter()
        assert all(snark.verify(vk, p, q) for p, q in items)
        t1 = time.perf_counter()
        assert snark.batch_verify(vk, items)
        single.append(t1 - t0)
        batch.append(time.perf_counter() - t1)
    s, b = statistics.median(single), statistics.median(batch)
    print(f"{args.n} proofs: single {1000 * s:.1f} ms, batched {1000 * b:.1f} ms, speedup {s / b:.2f}x")


if __name__ == "__main__":
    main()
