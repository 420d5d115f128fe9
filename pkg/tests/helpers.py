"""Builders shared by several test modules."""
import random
from dataclasses import dataclass

from procattest import circuit, evidence
from procattest.circuit import PrivateWitness, PublicInputs


@dataclass
class Honest:
    config: circuit.CircuitConfig
    checkpoint: evidence.Checkpoint
    public: PublicInputs
    witness: PrivateWitness


def honest_checkpoint(config, population, swf_params, seed=0, index=1, tau_prev=0,
                      prev_hash=None) -> Honest:
    """A satisfiable public/private pair for checkpoint ``index``."""
    rng = random.Random(seed)
    nonce = rng.randbytes(32)
    prev_hash = prev_hash or evidence.genesis_hash(nonce)
    chain = evidence.generate_swf(nonce, swf_params, index)
    feats = [rng.randint(a, b) for a, b in population.bounds]
    rand = [rng.randrange(1 << 250) for _ in feats]
    tau = tau_prev + rng.randint(25_000, 120_000)
    cp = evidence.build_checkpoint(prev_hash, rng.randbytes(32), feats, rand, chain,
                                   tau, tau // 1000, index, config.m)
    pub = circuit.public_from_checkpoint(cp, population.mu, population.sigma)
    wit = circuit.witness_from_checkpoint(cp, config, tau_prev)
    return Honest(config, cp, pub, wit)
