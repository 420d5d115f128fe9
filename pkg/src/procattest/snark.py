"""Groth16 over BN254 for the attestation circuit.

Only group and FFT primitives come from the native extension; key
generation, the quotient computation, proving and (batch) verification are
implemented here.  Keys carry the circuit digest and are refused for any
other configuration.

The constraint matrices are extended with one row ``x_i * 0 = 0`` per public
input (including the constant one) so the public-input polynomials are
linearly independent, as in arkworks.

Setup from a seed is deterministic and therefore only fit for testing; with
``production=True`` (or ``PROCATTEST_PRODUCTION=1``) a seed is refused and
fresh OS randomness is used.
"""
from __future__ import annotations

import hashlib
import json
import os
import secrets
import struct
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
from zksnake._algebra import ec_bn254 as ec
from zksnake._algebra import polynomial_bn254 as pl

from . import circuit
from .circuit import CircuitConfig, ConfigError, PrivateWitness, PublicInputs
from .commitments import RangeProof
from .field import P, hash_to_scalar
from .r1cs import SynthesisError

CURVE = "bn254"
COSET_GEN = 5  # multiplicative generator of the scalar field
G1_BYTES = 32
G2_BYTES = 64
PROOF_BYTES = 2 * G1_BYTES + G2_BYTES
BATCH_CHALLENGE_BITS = 128

PK_MAGIC = b"PAPK"
VK_MAGIC = b"PAVK"
KEY_VERSION = 1

_G1 = ec.g1()
_G2 = ec.g2()
_ZERO_G1 = _G1 * 0
_ZERO_G2 = _G2 * 0
_GT_ONE = ec.pairing(_ZERO_G1, _G2)


class ProvingError(ValueError):
    """The witness does not satisfy the circuit; no proof is produced."""


class KeyFormatError(ValueError):
    pass


# -- proof -------------------------------------------------------------------------

@dataclass(frozen=True)
class Proof:
    a: object
    b: object
    c: object

    def to_bytes(self) -> bytes:
        return bytes(self.a.to_bytes()) + bytes(self.b.to_bytes()) + bytes(self.c.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        if len(data) != PROOF_BYTES:
            raise ValueError(f"core proof must be {PROOF_BYTES} bytes")
        a = ec.PointG1.from_bytes(data[:G1_BYTES])
        b = ec.PointG2.from_bytes(data[G1_BYTES:G1_BYTES + G2_BYTES])
        c = ec.PointG1.from_bytes(data[G1_BYTES + G2_BYTES:])
        return cls(a, b, c)


@dataclass
class AttestationProof:
    """Core proof plus everything a verifier needs for one checkpoint.

    ``range_proofs`` holds the feature-interval proof and the temporal proof;
    ``commitments`` the per-feature commitments followed by the timestamp
    commitment; ``record`` the public checkpoint record.
    """

    proof: Proof
    public_inputs: PublicInputs
    range_proofs: list = field(default_factory=list)
    index: int = 0
    commitments: list = field(default_factory=list)
    record: bytes = b""

    @property
    def proof_bytes(self) -> bytes:
        return self.proof.to_bytes()


# -- keys ------------------------------------------------------------------------

def _ser(points) -> bytes:
    return b"".join(bytes(p.to_bytes()) for p in points)


def _de(data: bytes, size: int, cls, count: int) -> list:
    if len(data) != size * count:
        raise KeyFormatError("key section has the wrong length")
    return [cls.from_bytes(data[i:i + size]) for i in range(0, len(data), size)]


def _sections(data: bytes, magic: bytes) -> tuple[bytes, dict, list[bytes]]:
    try:
        head_magic, version, dlen = struct.unpack_from("<4sBI", data, 0)
        if head_magic != magic or version != KEY_VERSION:
            raise KeyFormatError("not a key file of this version")
        off = 9
        digest = data[off:off + 32]
        off += 32
        meta = json.loads(data[off:off + dlen].decode())
        off += dlen
        parts = []
        while off < len(data):
            (n,) = struct.unpack_from("<Q", data, off)
            off += 8
            parts.append(data[off:off + n])
            off += n
        if off != len(data):
            raise KeyFormatError("truncated key")
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, KeyFormatError):
            raise
        raise KeyFormatError(f"malformed key: {exc}") from exc
    return digest, meta, parts


def _pack(magic: bytes, digest: bytes, meta: dict, parts: Sequence[bytes]) -> bytes:
    m = json.dumps(meta, sort_keys=True).encode()
    out = [struct.pack("<4sBI", magic, KEY_VERSION, len(m)), digest, m]
    for part in parts:
        out += [struct.pack("<Q", len(part)), part]
    return b"".join(out)


def _config_meta(config: CircuitConfig | None) -> dict | None:
    return None if config is None else config.to_dict()


def _config_from_meta(meta: dict, digest: bytes) -> CircuitConfig | None:
    """The embedded circuit config, checked against the key's digest."""
    raw = meta.get("config")
    if raw is None:
        return None
    try:
        config = CircuitConfig.from_dict(raw)
    except (ConfigError, AttributeError) as exc:
        raise KeyFormatError(f"bad circuit config in key: {exc}") from exc
    if config.digest() != digest:
        raise KeyFormatError("circuit digest does not match the embedded config")
    return config


@dataclass
class VerifyingKey:
    config: CircuitConfig | None
    alpha_g1: object
    beta_g2: object
    gamma_g2: object
    delta_g2: object
    gamma_abc: list
    digest: bytes = b""
    _alpha_beta: object = field(default=None, repr=False, compare=False)

    @property
    def circuit_digest(self) -> bytes:
        return self.digest or self.config.digest()

    @property
    def num_public(self) -> int:
        return len(self.gamma_abc) - 1

    @property
    def alpha_beta(self):
        if self._alpha_beta is None:
            self._alpha_beta = ec.pairing(self.alpha_g1, self.beta_g2)
        return self._alpha_beta

    def to_bytes(self) -> bytes:
        meta = {"curve": CURVE, "config": _config_meta(self.config)}
        parts = [_ser([self.alpha_g1]), _ser([self.beta_g2, self.gamma_g2, self.delta_g2]),
                 _ser(self.gamma_abc)]
        return _pack(VK_MAGIC, self.circuit_digest, meta, parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerifyingKey":
        digest, meta, parts = _sections(data, VK_MAGIC)
        if meta.get("curve") != CURVE or len(parts) != 3:
            raise KeyFormatError("unsupported verifying key")
        config = _config_from_meta(meta, digest)
        n_abc = config.num_public + 1 if config else max(1, len(parts[2]) // G1_BYTES)
        try:
            (alpha,) = _de(parts[0], G1_BYTES, ec.PointG1, 1)
            beta, gamma, delta = _de(parts[1], G2_BYTES, ec.PointG2, 3)
            abc = _de(parts[2], G1_BYTES, ec.PointG1, n_abc)
        except ValueError as exc:
            raise KeyFormatError(f"bad point in verifying key: {exc}") from exc
        return cls(config, alpha, beta, gamma, delta, abc, digest)


@dataclass
class ProvingKey:
    config: CircuitConfig | None
    domain_size: int
    num_constraints: int
    num_variables: int
    alpha_g1: object
    beta_g1: object
    beta_g2: object
    delta_g1: object
    delta_g2: object
    a_query: list
    b_g1_query: list
    b_g2_query: list
    h_query: list
    l_query: list
    vk: VerifyingKey = field(repr=False)
    digest: bytes = b""

    @property
    def circuit_digest(self) -> bytes:
        return self.digest or self.config.digest()

    def to_bytes(self) -> bytes:
        meta = {
            "curve": CURVE, "config": _config_meta(self.config), "domain_size": self.domain_size,
            "num_constraints": self.num_constraints, "num_variables": self.num_variables,
        }
        parts = [
            _ser([self.alpha_g1, self.beta_g1, self.delta_g1]),
            _ser([self.beta_g2, self.delta_g2]),
            _ser(self.a_query), _ser(self.b_g1_query), _ser(self.b_g2_query),
            _ser(self.h_query), _ser(self.l_query), self.vk.to_bytes(),
        ]
        return _pack(PK_MAGIC, self.circuit_digest, meta, parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProvingKey":
        digest, meta, parts = _sections(data, PK_MAGIC)
        if meta.get("curve") != CURVE or len(parts) != 8:
            raise KeyFormatError("unsupported proving key")
        config = _config_from_meta(meta, digest)
        vk = VerifyingKey.from_bytes(parts[7])
        if vk.circuit_digest != digest:
            raise KeyFormatError("embedded verifying key belongs to another circuit")
        try:
            nv, n = int(meta["num_variables"]), int(meta["domain_size"])
        except (KeyError, TypeError, ValueError) as exc:
            raise KeyFormatError("proving key metadata is incomplete") from exc
        npub = vk.num_public + 1
        try:
            alpha, beta1, delta1 = _de(parts[0], G1_BYTES, ec.PointG1, 3)
            beta2, delta2 = _de(parts[1], G2_BYTES, ec.PointG2, 2)
            a_q = _de(parts[2], G1_BYTES, ec.PointG1, nv)
            b1_q = _de(parts[3], G1_BYTES, ec.PointG1, nv)
            b2_q = _de(parts[4], G2_BYTES, ec.PointG2, nv)
            h_q = _de(parts[5], G1_BYTES, ec.PointG1, n - 1)
            l_q = _de(parts[6], G1_BYTES, ec.PointG1, nv - npub)
        except ValueError as exc:
            raise KeyFormatError(f"bad point in proving key: {exc}") from exc
        return cls(config, n, meta["num_constraints"], nv, alpha, beta1, beta2, delta1, delta2,
                   a_q, b1_q, b2_q, h_q, l_q, vk, digest)


@dataclass
class SetupArtifacts:
    proving_key: ProvingKey
    verifying_key: VerifyingKey
    circuit_digest: bytes
    curve: str = CURVE

    def proving_key_bytes(self) -> bytes:
        return self.proving_key.to_bytes()

    def verifying_key_bytes(self) -> bytes:
        return self.verifying_key.to_bytes()


# -- setup -----------------------------------------------------------------------

def _domain_size(rows: int) -> int:
    n = 2
    while n < rows:
        n *= 2
    return n


def _extended_rows(cs) -> list:
    """Constraint rows followed by the public-input consistency rows."""
    return cs.rows + [({i: 1}, {}, {}) for i in range(cs.num_public + 1)]


def _lagrange_at(n: int, tau: int) -> list[int]:
    """All ``L_i(tau)`` over the size-``n`` subgroup (``tau`` outside it)."""
    omega = gmpy2.mpz(pl.get_nth_root_of_unity(n, 1))
    tau = gmpy2.mpz(tau)
    z_over_n = (pow(tau, n, P) - 1) * pow(n, -1, P) % P
    pts, denoms = [], []
    w = gmpy2.mpz(1)
    for _ in range(n):
        pts.append(w)
        denoms.append((tau - w) % P)
        w = w * omega % P
    # batch inversion
    prefix = [gmpy2.mpz(1)] * (n + 1)
    for i, d in enumerate(denoms):
        prefix[i + 1] = prefix[i] * d % P
    inv = gmpy2.invert(prefix[n], P)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = int(z_over_n * pts[i] % P * prefix[i] % P * inv % P)
        inv = inv * denoms[i] % P
    return out


def _batch_g1(scalars: Sequence[int]) -> list:
    nz = [i for i, s in enumerate(scalars) if s]
    out = [_ZERO_G1] * len(scalars)
    if nz:
        pts = ec.batch_multi_scalar_g1([_G1] * len(nz), [scalars[i] for i in nz])
        for i, p in zip(nz, pts):
            out[i] = p
    return out


def _batch_g2(scalars: Sequence[int]) -> list:
    nz = [i for i, s in enumerate(scalars) if s]
    out = [_ZERO_G2] * len(scalars)
    if nz:
        pts = ec.batch_multi_scalar_g2([_G2] * len(nz), [scalars[i] for i in nz])
        for i, p in zip(nz, pts):
            out[i] = p
    return out


def _toxic(seed: bytes | None, digest: bytes, n: int) -> dict:
    names = ("tau", "alpha", "beta", "gamma", "delta")
    out = {}
    for name in names:
        ctr = 0
        while True:
            if seed is None:
                x = secrets.randbelow(P)
            else:
                x = hash_to_scalar(P, b"procattest/groth16/setup", seed, digest,
                                   name.encode(), ctr.to_bytes(4, "little"))
            ctr += 1
            if x and not (name == "tau" and pow(x, n, P) == 1):
                out[name] = x
                break
    return out


def _production_mode(production: bool) -> bool:
    return production or os.environ.get("PROCATTEST_PRODUCTION", "") not in ("", "0")


def setup(config: CircuitConfig, seed: bytes | None = None, production: bool = False) -> SetupArtifacts:
    """Circuit-specific key generation.

    A seed makes the keys reproducible, and anyone holding it can forge
    proofs; seeded setup is refused in production mode.
    """
    config.validate()
    pub, wit = circuit.placeholder_inputs(config)
    cs = circuit.synthesize(config, pub, wit, record=True)
    pk, vk = keygen(cs, config.digest(), seed, config, production)
    return SetupArtifacts(pk, vk, config.digest())


def keygen(cs, digest: bytes, seed: bytes | None = None, config: CircuitConfig | None = None,
           production: bool = False) -> tuple[ProvingKey, VerifyingKey]:
    """Groth16 keys for any record-mode constraint system."""
    if not cs.record:
        raise ValueError("key generation needs the constraint matrices (record=True)")
    if len(digest) != 32:
        raise ValueError("circuit digest must be 32 bytes")
    if _production_mode(production) and seed is not None:
        raise ValueError("seeded setup is insecure and refused in production mode")
    rows = _extended_rows(cs)
    n = _domain_size(len(rows))
    t = _toxic(seed, digest, n)
    tau, alpha, beta, gamma, delta = (gmpy2.mpz(t[k]) for k in ("tau", "alpha", "beta", "gamma", "delta"))
    lag = _lagrange_at(n, int(tau))

    nv = cs.num_variables
    u = [gmpy2.mpz(0)] * nv
    v = [gmpy2.mpz(0)] * nv
    w = [gmpy2.mpz(0)] * nv
    for r, (a_row, b_row, c_row) in enumerate(rows):
        lr = lag[r]
        for j, coeff in a_row.items():
            u[j] += coeff * lr
        for j, coeff in b_row.items():
            v[j] += coeff * lr
        for j, coeff in c_row.items():
            w[j] += coeff * lr
    u = [int(x % P) for x in u]
    v = [int(x % P) for x in v]
    w = [int(x % P) for x in w]

    npub = cs.num_public + 1
    gamma_inv = gmpy2.invert(gamma, P)
    delta_inv = gmpy2.invert(delta, P)
    comb = [(beta * u[j] + alpha * v[j] + w[j]) % P for j in range(nv)]
    abc = [int(c * gamma_inv % P) for c in comb[:npub]]
    l_sc = [int(c * delta_inv % P) for c in comb[npub:]]
    z_delta = (pow(tau, n, P) - 1) * delta_inv % P
    h_sc = []
    acc = z_delta
    for _ in range(n - 1):
        h_sc.append(int(acc))
        acc = acc * tau % P

    alpha_g1, beta_g1, delta_g1 = (_G1 * int(x) for x in (alpha, beta, delta))
    beta_g2, gamma_g2, delta_g2 = (_G2 * int(x) for x in (beta, gamma, delta))
    vk = VerifyingKey(config, alpha_g1, beta_g2, gamma_g2, delta_g2, _batch_g1(abc), digest)
    pk = ProvingKey(
        config, n, cs.num_constraints, nv, alpha_g1, beta_g1, beta_g2, delta_g1, delta_g2,
        _batch_g1(u), _batch_g1(v), _batch_g2(v), _batch_g1(h_sc), _batch_g1(l_sc), vk, digest,
    )
    return pk, vk


def derive_verifying_key(config: CircuitConfig, seed: bytes) -> VerifyingKey:
    return setup(config, seed).verifying_key


# -- proving ---------------------------------------------------------------------

def _msm(points, scalars, zero, msm_fn):
    """Multi-scalar multiplication that skips zeros and adds unit terms directly."""
    ones = zero
    pts, scs = [], []
    for p, s in zip(points, scalars):
        if s == 0:
            continue
        if s == 1:
            ones = ones + p
        else:
            pts.append(p)
            scs.append(s)
    return ones + msm_fn(pts, scs) if pts else ones


def _msm_g1(points, scalars):
    return _msm(points, scalars, _ZERO_G1, ec.multiscalar_mul_g1)


def _msm_g2(points, scalars):
    return _msm(points, scalars, _ZERO_G2, ec.multiscalar_mul_g2)


def _coset_scale(values: list, factor: int) -> list:
    out = []
    acc = gmpy2.mpz(1)
    f = gmpy2.mpz(factor)
    for x in values:
        out.append(int(x * acc % P))
        acc = acc * f % P
    return out


def quotient(evals: Sequence[tuple[int, int, int]], n: int, strict: bool = True) -> list[int]:
    """Coefficients of ``h = (A*B - C) / Z`` from row evaluations over the domain."""
    a = [e[0] for e in evals] + [0] * (n - len(evals))
    b = [e[1] for e in evals] + [0] * (n - len(evals))
    c = [e[2] for e in evals] + [0] * (n - len(evals))
    coset = []
    for col in (a, b, c):
        coeffs = pl.ifft(col, n)
        coset.append(pl.fft(_coset_scale(coeffs, COSET_GEN), n))
    z_inv = gmpy2.invert(gmpy2.mpz(pow(COSET_GEN, n, P) - 1), P)
    ha, hb, hc = coset
    h_coset = [int((gmpy2.mpz(x) * y - z) % P * z_inv % P) for x, y, z in zip(ha, hb, hc)]
    h = _coset_scale(pl.ifft(h_coset, n), pow(COSET_GEN, -1, P))
    if strict and h[n - 1] != 0:
        raise ProvingError("quotient has too high a degree; constraints are not satisfied")
    return h[: n - 1]


def prove(
    pk: ProvingKey,
    public: PublicInputs,
    witness: PrivateWitness,
    rng=None,
    index: int = 0,
) -> AttestationProof:
    """Prove one checkpoint; raises :class:`ProvingError` on a bad witness."""
    try:
        cs = circuit.synthesize(pk.config, public, witness, record=False)
    except SynthesisError as exc:
        raise ProvingError(str(exc)) from exc
    return AttestationProof(prove_system(pk, cs, rng), public, [], index)


def prove_system(pk: ProvingKey, cs, rng=None) -> Proof:
    """Proof for a witness-mode system built by the same code as the key."""
    bad = cs.unsatisfied()
    if bad:
        fams = sorted({f for _, f in bad})
        raise ProvingError(f"witness violates {len(bad)} constraints in {', '.join(fams)}")
    if cs.num_variables != pk.num_variables or cs.num_constraints != pk.num_constraints:
        raise ProvingError("witness system does not match the proving key")
    return _groth16(pk, cs, rng)


def _groth16(pk: ProvingKey, cs, rng=None, strict: bool = True) -> Proof:
    """The prover proper.  ``strict=False`` skips the degree check (for soundness tests)."""
    n = pk.domain_size
    npub = cs.num_public + 1
    vals = cs.values
    evals = cs.evals + [(vals[i], 0, 0) for i in range(npub)]
    h = quotient(evals, n, strict)

    draw = (lambda: rng.randrange(1, P)) if rng is not None else (lambda: secrets.randbelow(P - 1) + 1)
    r, s = draw(), draw()
    a = pk.alpha_g1 + _msm_g1(pk.a_query, vals) + pk.delta_g1 * r
    b2 = pk.beta_g2 + _msm_g2(pk.b_g2_query, vals) + pk.delta_g2 * s
    b1 = pk.beta_g1 + _msm_g1(pk.b_g1_query, vals) + pk.delta_g1 * s
    c = (_msm_g1(pk.l_query, vals[npub:]) + _msm_g1(pk.h_query, h)
         + a * s + b1 * r + pk.delta_g1 * ((-r * s) % P))
    return Proof(a, b2, c)


# -- verification ------------------------------------------------------------------

def _public_scalars(vk: VerifyingKey, public) -> list[int] | None:
    try:
        if isinstance(public, PublicInputs):
            if vk.config is None:
                return None
            public.validate(vk.config)
            elems = public.field_elements()
        else:
            elems = [int(x) for x in public]
    except (SynthesisError, TypeError, ValueError):
        return None
    if len(elems) != vk.num_public or any(not 0 <= x < P for x in elems):
        return None
    return [1] + elems


def _as_proof(proof) -> Proof | None:
    if isinstance(proof, AttestationProof):
        proof = proof.proof
    if isinstance(proof, Proof):
        return proof
    if isinstance(proof, _LazyProof):
        proof = proof.data
    try:
        return Proof.from_bytes(bytes(proof))
    except (ValueError, TypeError):
        return None


def verify(vk: VerifyingKey, public, proof) -> bool:
    """Single-proof check ``e(A,B) = e(alpha,beta) e(IC,gamma) e(C,delta)``.

    ``proof`` may be a :class:`Proof`, an :class:`AttestationProof` or raw bytes;
    anything malformed yields ``False``.
    """
    x = _public_scalars(vk, public)
    pr = _as_proof(proof)
    if x is None or pr is None:
        return False
    ic = _msm_g1(vk.gamma_abc, x)
    lhs = ec.multi_pairing([pr.a, -ic, -pr.c], [pr.b, vk.gamma_g2, vk.delta_g2])
    return lhs == vk.alpha_beta


def batch_challenges(vk: VerifyingKey, items: Sequence[tuple[list[int], Proof]], rng_seed: bytes) -> list[int]:
    """Reproducible 128-bit combination scalars bound to every (public, proof) pair."""
    h = hashlib.sha256(b"procattest/groth16/batch")
    h.update(len(rng_seed).to_bytes(4, "little") + rng_seed)
    h.update(vk.circuit_digest)
    for x, pr in items:
        for e in x:
            h.update(e.to_bytes(32, "little"))
        h.update(pr.to_bytes())
    root = h.digest()
    out = []
    for i in range(len(items)):
        ctr = 0
        while True:
            d = hashlib.sha256(root + i.to_bytes(4, "little") + ctr.to_bytes(4, "little")).digest()
            r = int.from_bytes(d[:BATCH_CHALLENGE_BITS // 8], "little")
            if r:
                break
            ctr += 1
        out.append(r)
    return out


def batch_verify(vk: VerifyingKey, items: Sequence[tuple], rng_seed: bytes = b"") -> bool:
    """Random-linear-combination check of many proofs with ``b + 3`` pairings."""
    if not items:
        raise ValueError("batch verification needs at least one item")
    parsed = []
    for public, proof in items:
        x = _public_scalars(vk, public)
        pr = _as_proof(proof)
        if x is None or pr is None:
            return False
        parsed.append((x, pr))
    rs = batch_challenges(vk, parsed, rng_seed)
    width = len(parsed[0][0])
    xs = [sum(r * x[j] for r, (x, _) in zip(rs, parsed)) % P for j in range(width)]
    ic = _msm_g1(vk.gamma_abc, xs)
    c_sum = ec.multiscalar_mul_g1([pr.c for _, pr in parsed], rs)
    r_sum = sum(rs) % P
    g1s = [pr.a * r for r, (_, pr) in zip(rs, parsed)] + [-(vk.alpha_g1 * r_sum), -ic, -c_sum]
    g2s = [pr.b for _, pr in parsed] + [vk.beta_g2, vk.gamma_g2, vk.delta_g2]
    return ec.multi_pairing(g1s, g2s) == _GT_ONE


# -- proof bundle ------------------------------------------------------------------
#
# A bundle is ``b"PABN" | u8 version`` followed by three framed sections:
# circuit digest, JSON header, and the framed list of entries.  Each entry is
# itself framed: u32 index, checkpoint record, public inputs, core proof,
# framed range proofs, framed commitments.  Frames are ``u32 length | bytes``.

BUNDLE_MAGIC = b"PABN"
BUNDLE_VERSION = 1


class BundleFormatError(ValueError):
    pass


def frame(parts: Sequence[bytes]) -> bytes:
    return b"".join(struct.pack("<I", len(p)) + bytes(p) for p in parts)


def unframe(data: bytes, count: int | None = None) -> list[bytes]:
    parts, off = [], 0
    while off < len(data):
        if off + 4 > len(data):
            raise BundleFormatError("truncated frame header")
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + n > len(data):
            raise BundleFormatError("truncated frame")
        parts.append(data[off:off + n])
        off += n
    if count is not None and len(parts) != count:
        raise BundleFormatError(f"expected {count} sections, found {len(parts)}")
    return parts


@dataclass
class ProofBundle:
    circuit_digest: bytes
    header: dict
    entries: list[AttestationProof]

    def to_bytes(self) -> bytes:
        blobs = []
        for e in self.entries:
            blobs.append(frame([
                struct.pack("<I", e.index), e.record, e.public_inputs.to_bytes(), e.proof_bytes,
                frame([rp.to_bytes() for rp in e.range_proofs]), frame(e.commitments),
            ]))
        head = json.dumps(self.header, sort_keys=True).encode()
        return BUNDLE_MAGIC + bytes([BUNDLE_VERSION]) + frame([self.circuit_digest, head, frame(blobs)])

    @classmethod
    def from_bytes(cls, data: bytes, m: int | None = None) -> "ProofBundle":
        """Parse a bundle; point validity of the core proofs is checked lazily."""
        if data[:4] != BUNDLE_MAGIC or len(data) < 5 or data[4] != BUNDLE_VERSION:
            raise BundleFormatError("not a proof bundle of this version")
        digest, head, body = unframe(data[5:], 3)
        try:
            header = json.loads(head.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BundleFormatError(f"bad bundle header: {exc}") from exc
        m = m if m is not None else int(header.get("m", 0))
        entries = []
        for blob in unframe(body):
            idx_b, record, pub_b, core, rps, cms = unframe(blob, 6)
            if len(idx_b) != 4:
                raise BundleFormatError("bad entry index")
            try:
                public = PublicInputs.from_bytes(pub_b, m)
                ranges = [RangeProof.from_bytes(r) for r in unframe(rps)]
            except ValueError as exc:
                raise BundleFormatError(str(exc)) from exc
            entries.append(AttestationProof(
                _LazyProof(core), public, ranges, struct.unpack("<I", idx_b)[0], unframe(cms), record,
            ))
        return cls(digest, header, entries)


class _LazyProof:
    """Raw core-proof bytes; parsed (and validated) by the verifier."""

    def __init__(self, data: bytes):
        self.data = data

    def to_bytes(self) -> bytes:
        return self.data
