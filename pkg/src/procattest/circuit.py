"""The checkpoint attestation circuit.

Four constraint families over the BN254 scalar field:

* C1, sequential work: for each of ``k`` positions sampled from the public
  root ``R``, the states ``s_{j-1}`` and ``s_j`` are opened against ``R`` and
  ``SHA256(s_{j-1}) = s_j`` is checked with an in-circuit SHA-256.
* C2, behaviour: every feature is a 16-bit value with
  ``mu_j - mult*sigma_j <= f_j <= mu_j + mult*sigma_j``.
* C3, timing: ``tau_i - tau_{i-1} >= d_min`` and the public duration is
  ``d_i = floor(tau_i / 1000)``.
* C4, content binding: the aggregate commitment ``sum(f)*g + R*h`` is
  recomputed on Baby Jubjub, serialized, and
  ``h_i = SHA256(h_{i-1} || delta_i || commitment)`` is recomputed.

Public inputs, in order: ``h_{i-1}`` (low limb, high limb), ``h_i`` (low,
high), ``R_i``, ``d_i``, ``mu_1..mu_m``, ``sigma_1..sigma_m``.  Digests enter
as two 128-bit little-endian limbs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from . import evidence, gadgets, jubjub, poseidon
from . import commitments as cm
from .field import P, digest_to_limbs, limbs_to_digest
from .r1cs import ConstraintSystem, SynthesisError, lc_sum

FIXED_POINT_MAX = 65535
DOMAIN_MAX_MS = 1000
TIMESTAMP_BITS = 40
FAMILIES = ("C1", "C2", "C3", "C4")


class ConfigError(ValueError):
    pass


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitConfig:
    m: int = 12
    k: int = 2
    n_bits: int = 16
    bounds_mult: int = 3
    chain_length: int = 4096
    feature_min_ms: int = 0
    feature_max_ms: int = DOMAIN_MAX_MS
    d_min_ms: int = cm.D_MIN_MS

    def validate(self) -> None:
        if self.m not in (6, 12, 24):
            raise ConfigError("m must be 6, 12 or 24")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.n_bits != 16:
            raise ConfigError("features are 16-bit fixed point")
        if self.bounds_mult < 1:
            raise ConfigError("bounds multiplier must be a positive integer")
        n = self.chain_length
        if n < 2 or n & (n - 1):
            raise ConfigError("the circuit needs a power-of-two chain length")
        if (self.feature_min_ms, self.feature_max_ms) != (0, DOMAIN_MAX_MS):
            raise ConfigError("feature domain is fixed to [0, 1000] ms")
        if not 0 < self.d_min_ms < 1 << TIMESTAMP_BITS:
            raise ConfigError("d_min out of range")

    @property
    def depth(self) -> int:
        return evidence.tree_depth(self.chain_length)

    @property
    def range_bits(self) -> int:
        # (mult + 1) * 65535 < 2^(16 + bitlen(mult))
        return self.n_bits + self.bounds_mult.bit_length()

    @property
    def num_public(self) -> int:
        return 6 + 2 * self.m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**{k: int(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def digest(self) -> bytes:
        """Identifies the circuit: config, hash parameters and curves."""
        blob = json.dumps(
            {"config": self.to_dict(), "poseidon": poseidon.PARAMS_ID,
             "curve": "bn254", "inner_curve": "babyjubjub", "version": 1},
            sort_keys=True,
        ).encode()
        return hashlib.sha256(blob).digest()


BASIC = CircuitConfig()
EXTENDED = CircuitConfig(m=24, k=8)


# -- fixed point ---------------------------------------------------------------------

def encode_fixed_point(value_ms) -> int:
    """Map ``[0, 1000]`` ms to ``[0, 65535]``, rounding half to even."""
    try:
        v = Fraction(value_ms)
    except (TypeError, ValueError) as exc:
        raise EncodingError(f"not a number: {value_ms!r}") from exc
    if not 0 <= v <= DOMAIN_MAX_MS:
        raise EncodingError(f"{value_ms} ms outside [0, {DOMAIN_MAX_MS}]")
    return round(v * FIXED_POINT_MAX / DOMAIN_MAX_MS)


def decode_fixed_point(scalar: int) -> float:
    return scalar * DOMAIN_MAX_MS / FIXED_POINT_MAX


def feature_bounds(mu: int, sigma: int, mult: int) -> tuple[int, int]:
    """Fixed-point acceptance interval, clipped to the encoding domain."""
    return max(0, mu - mult * sigma), min(FIXED_POINT_MAX, mu + mult * sigma)


# -- inputs ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PublicInputs:
    prev_hash: bytes
    hash: bytes
    swf_root: int
    duration: int
    mu: tuple[int, ...]
    sigma: tuple[int, ...]

    def validate(self, config: CircuitConfig) -> None:
        if len(self.prev_hash) != 32 or len(self.hash) != 32:
            raise SynthesisError("digests must be 32 bytes")
        if not 0 <= self.swf_root < P:
            raise SynthesisError("root is not a field element")
        if not 0 <= self.duration < 1 << 32:
            raise SynthesisError("duration out of range")
        if len(self.mu) != config.m or len(self.sigma) != config.m:
            raise SynthesisError(f"expected {config.m} population parameters")
        for x in (*self.mu, *self.sigma):
            if not 0 <= x <= FIXED_POINT_MAX:
                raise SynthesisError("population parameters must be 16-bit")

    def field_elements(self) -> list[int]:
        return [*digest_to_limbs(self.prev_hash), *digest_to_limbs(self.hash),
                self.swf_root, self.duration, *self.mu, *self.sigma]

    def to_bytes(self) -> bytes:
        return b"".join(x.to_bytes(32, "little") for x in self.field_elements())

    @classmethod
    def from_field_elements(cls, elems: Sequence[int], m: int) -> "PublicInputs":
        if len(elems) != 6 + 2 * m:
            raise SynthesisError("wrong number of public inputs")
        return cls(limbs_to_digest(elems[0], elems[1]), limbs_to_digest(elems[2], elems[3]),
                   elems[4], elems[5], tuple(elems[6:6 + m]), tuple(elems[6 + m:]))

    @classmethod
    def from_bytes(cls, data: bytes, m: int) -> "PublicInputs":
        if len(data) != 32 * (6 + 2 * m):
            raise SynthesisError("wrong public input length")
        return cls.from_field_elements(
            [int.from_bytes(data[i:i + 32], "little") for i in range(0, len(data), 32)], m)


@dataclass(frozen=True)
class SampleOpening:
    prev_state: bytes
    prev_path: tuple[int, ...]
    cur_path: tuple[int, ...]


@dataclass(frozen=True)
class PrivateWitness:
    features: tuple[int, ...]
    randomness: tuple[int, ...]
    tau_prev: int
    tau: int
    delta: bytes
    samples: tuple[SampleOpening, ...] = field(repr=False)

    @property
    def aggregate_randomness(self) -> int:
        return sum(self.randomness) % jubjub.ORDER


def placeholder_inputs(config: CircuitConfig) -> tuple[PublicInputs, PrivateWitness]:
    """Inputs of the right shape, used to extract the constraint matrices."""
    z = bytes(32)
    pub = PublicInputs(z, z, 0, 0, (0,) * config.m, (0,) * config.m)
    opening = SampleOpening(z, (0,) * config.depth, (0,) * config.depth)
    wit = PrivateWitness((0,) * config.m, (0,) * config.m, 0, 0, z, (opening,) * config.k)
    return pub, wit


def witness_from_checkpoint(
    cp: evidence.Checkpoint, config: CircuitConfig, tau_prev: int
) -> PrivateWitness:
    """Private witness for ``cp``; needs the checkpoint's finalized chain."""
    if cp.swf is None or cp.swf.tree is None:
        raise SynthesisError("checkpoint carries no finalized chain")
    tree = cp.swf.tree
    plan = evidence.sample_positions(cp.swf_root, config.k, config.chain_length)
    samples = tuple(
        SampleOpening(cp.swf.state(j - 1), tuple(tree.path(j - 1)), tuple(tree.path(j)))
        for j in plan.indices
    )
    return PrivateWitness(tuple(cp.features), tuple(cp.randomness), tau_prev,
                          cp.timestamp, cp.delta, samples)


def public_from_checkpoint(cp: evidence.Checkpoint, mu, sigma) -> PublicInputs:
    return PublicInputs(cp.prev_hash, cp.hash, cp.swf_root, cp.duration, tuple(mu), tuple(sigma))


# -- synthesis ---------------------------------------------------------------------------

def _check_shapes(config: CircuitConfig, pub: PublicInputs, wit: PrivateWitness) -> None:
    pub.validate(config)
    if len(wit.features) != config.m or len(wit.randomness) != config.m:
        raise SynthesisError(f"expected {config.m} features")
    if len(wit.samples) != config.k:
        raise SynthesisError(f"expected {config.k} chain samples")
    for s in wit.samples:
        if len(s.prev_path) != config.depth or len(s.cur_path) != config.depth or len(s.prev_state) != 32:
            raise SynthesisError("malformed chain opening")
    if len(wit.delta) != 32:
        raise SynthesisError("delta must be 32 bytes")


def _limb_bits(cs, lo, hi):
    return gadgets.to_bits(cs, lo, 128) + gadgets.to_bits(cs, hi, 128)


def _digest_limbs(cs, bits):
    return gadgets.pack(cs, bits[:128]), gadgets.pack(cs, bits[128:256])


def _state_leaf(cs, bits):
    lo, hi = _digest_limbs(cs, bits)
    return gadgets.poseidon_hash2(cs, lo, hi)


def _sampled_link(cs, config, root, ell, opening):
    """C1 for one sample: open s_{j-1} and s_j and check the SHA-256 link."""
    log_n = config.chain_length.bit_length() - 1
    h = gadgets.poseidon_hash2(cs, root, cs.const(ell))
    h_bits = gadgets.to_bits_canonical(cs, h)
    residue = h_bits[:log_n]  # j - 1 = h mod N
    prev_bits = residue + [cs.const(0)] * (config.depth - log_n)
    cur_bits = gadgets.to_bits(cs, gadgets.pack(cs, residue) + 1, config.depth)

    prev_state = gadgets.alloc_bytes_bits(cs, opening.prev_state)
    prev_sibs = [cs.alloc(v) for v in opening.prev_path]
    cur_sibs = [cs.alloc(v) for v in opening.cur_path]
    cur_state = gadgets.sha256(cs, prev_state)

    prev_root = gadgets.merkle_root(cs, _state_leaf(cs, prev_state), prev_bits, prev_sibs)
    cur_root = gadgets.merkle_root(cs, _state_leaf(cs, cur_state), cur_bits, cur_sibs)
    cs.enforce_equal(prev_root, root)
    cs.enforce_equal(cur_root, root)


def synthesize(
    config: CircuitConfig,
    public: PublicInputs,
    witness: PrivateWitness,
    record: bool = False,
) -> ConstraintSystem:
    """Build the constraint system (``record=True`` keeps the matrices)."""
    config.validate()
    _check_shapes(config, public, witness)
    cs = ConstraintSystem(record=record)
    elems = public.field_elements()
    prev_lo, prev_hi, h_lo, h_hi, root, duration = (cs.alloc_public(v) for v in elems[:6])
    mus = [cs.alloc_public(v) for v in elems[6:6 + config.m]]
    sigmas = [cs.alloc_public(v) for v in elems[6 + config.m:]]

    with cs.family("C1"):
        for ell, opening in enumerate(witness.samples, start=1):
            _sampled_link(cs, config, root, ell, opening)

    with cs.family("C2"):
        f_packed = []
        mult = config.bounds_mult
        for f, mu, sigma in zip(witness.features, mus, sigmas):
            fv = cs.alloc(f)
            gadgets.to_bits(cs, fv, config.n_bits)
            gadgets.to_bits(cs, fv - mu + sigma.scale(mult), config.range_bits)
            gadgets.to_bits(cs, mu + sigma.scale(mult) - fv, config.range_bits)
            f_packed.append(fv)

    with cs.family("C3"):
        tau_prev = cs.alloc(witness.tau_prev)
        tau = cs.alloc(witness.tau)
        gadgets.to_bits(cs, tau_prev, TIMESTAMP_BITS)
        gadgets.to_bits(cs, tau, TIMESTAMP_BITS)
        gadgets.to_bits(cs, tau - tau_prev - config.d_min_ms, TIMESTAMP_BITS)
        # d_i = floor(tau_i / 1000): 0 <= tau - 1000 d <= 999
        rem = tau - duration.scale(1000)
        gadgets.to_bits(cs, rem, 10)
        gadgets.to_bits(cs, 999 - rem, 10)

    with cs.family("C4"):
        prev_bits = _limb_bits(cs, prev_lo, prev_hi)
        delta_bits = gadgets.alloc_bytes_bits(cs, witness.delta)
        total = lc_sum(f_packed, cs.record)
        total_bits = gadgets.to_bits(cs, total, config.n_bits + config.m.bit_length())
        r_bits = [gadgets.alloc_bit(cs, (witness.aggregate_randomness >> i) & 1)
                  for i in range(jubjub.ORDER.bit_length())]
        params = cm.default_params()
        point = gadgets.point_add(
            cs,
            gadgets.fixed_base_mul(cs, params.g, total_bits),
            gadgets.fixed_base_mul(cs, params.h, r_bits),
        )
        commitment_bits = gadgets.compress_point_bits(cs, point)
        digest = gadgets.sha256(cs, prev_bits + delta_bits + commitment_bits)
        out_lo, out_hi = _digest_limbs(cs, digest)
        cs.enforce_equal(out_lo, h_lo)
        cs.enforce_equal(out_hi, h_hi)
    return cs


def is_satisfied(config: CircuitConfig, public: PublicInputs, witness: PrivateWitness) -> bool:
    try:
        return synthesize(config, public, witness).is_satisfied()
    except SynthesisError:
        return False


@dataclass(frozen=True)
class ConstraintReport:
    c1: int
    c2: int
    c3: int
    c4: int
    total: int
    variables: int
    public_inputs: int

    def as_rows(self) -> list[tuple[str, int]]:
        return [("C1 sampled chain links", self.c1), ("C2 feature ranges", self.c2),
                ("C3 timing", self.c3), ("C4 content binding", self.c4), ("total", self.total)]


def report_from_system(cs: ConstraintSystem) -> ConstraintReport:
    counts = cs.family_counts()
    return ConstraintReport(counts["C1"], counts["C2"], counts["C3"], counts["C4"],
                            cs.num_constraints, cs.num_variables, cs.num_public)


def constraint_count(config: CircuitConfig) -> ConstraintReport:
    pub, wit = placeholder_inputs(config)
    return report_from_system(synthesize(config, pub, wit))
