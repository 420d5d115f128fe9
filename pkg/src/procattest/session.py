"""Session pipeline: event stream in, checkpoints and a proof bundle out.

Each event record is one checkpoint window: a timestamp (ms since session
start), the window's feature vector in milliseconds, and the digest of the
content delta.  Attestation builds the work chain, commits to features and
timestamp, proves the circuit, and attaches two range proofs:

* features: ``a_j <= f_j <= b_j`` for the population intervals;
* timing: ``d_min <= tau_i - tau_{i-1} <= d_max`` on the difference of the
  timestamp commitments (the session starts at ``tau_0 = 0``, committed with
  zero randomness).

The verifier links the per-feature commitments to the core proof by
recomputing ``h_i`` from the record's delta and the compressed sum of the
commitments.
"""
from __future__ import annotations

import hashlib
import json
import random
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import circuit, evidence, jubjub, snark
from . import commitments as cm
from .circuit import CircuitConfig, EncodingError, PublicInputs, encode_fixed_point
from .privacy import PopulationParams

STREAM_VERSION = 1


class AttestError(ValueError):
    """A checkpoint cannot be attested; ``index`` and ``feature`` locate it."""

    def __init__(self, message: str, index: int | None = None, feature: int | None = None):
        super().__init__(message)
        self.index = index
        self.feature = feature


# -- event streams -------------------------------------------------------------

@dataclass(frozen=True)
class EventRecord:
    timestamp_ms: int
    features_ms: tuple[float, ...]
    delta: bytes


@dataclass
class EventStream:
    session_id: str
    nonce: bytes
    records: list[EventRecord]

    def validate(self) -> None:
        if len(self.nonce) != 32:
            raise ValueError("session nonce must be 32 bytes")
        prev = 0
        for i, r in enumerate(self.records, start=1):
            if r.timestamp_ms < prev:
                raise ValueError(f"record {i}: timestamps must be nondecreasing")
            if len(r.delta) != 32:
                raise ValueError(f"record {i}: delta digest must be 32 bytes")
            prev = r.timestamp_ms

    def to_json(self) -> str:
        return json.dumps({
            "version": STREAM_VERSION, "session_id": self.session_id, "nonce": self.nonce.hex(),
            "records": [{"timestamp_ms": r.timestamp_ms, "features_ms": list(r.features_ms),
                         "delta": r.delta.hex()} for r in self.records],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EventStream":
        try:
            d = json.loads(text)
            if d.get("version") != STREAM_VERSION:
                raise ValueError("unsupported event stream version")
            stream = cls(str(d["session_id"]), bytes.fromhex(d["nonce"]), [
                EventRecord(int(r["timestamp_ms"]), tuple(float(x) for x in r["features_ms"]),
                            bytes.fromhex(r["delta"]))
                for r in d["records"]
            ])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValueError(f"malformed event stream: {exc}") from exc
        stream.validate()
        return stream


def synthetic_stream(n: int, population: PopulationParams, seed: int = 0, r1: float = 0.111,
                     gap_ms: tuple[int, int] = (27_000, 40_000), session_id: str | None = None) -> EventStream:
    """Honest-looking stream whose features stay inside the population intervals."""
    rng = np.random.default_rng([seed, n, 7])
    scale = circuit.DOMAIN_MAX_MS / circuit.FIXED_POINT_MAX
    mu = np.array(population.mu) * scale
    sigma = np.array(population.sigma) * scale
    lo = np.array([a for a, _ in population.bounds]) * scale
    hi = np.array([b for _, b in population.bounds]) * scale
    x = rng.standard_normal(len(mu))
    records, t = [], 0
    for _ in range(n):
        x = r1 * x + np.sqrt(1 - r1 * r1) * rng.standard_normal(len(mu))
        f = np.clip(mu + sigma * x, lo + scale, hi - scale)  # stay clear of rounding at the edges
        t += int(rng.integers(gap_ms[0], gap_ms[1] + 1))
        records.append(EventRecord(t, tuple(round(float(v), 3) for v in f), rng.bytes(32)))
    sid = session_id or f"synthetic-{seed}-{n}"
    return EventStream(sid, hashlib.sha256(f"{sid}/{seed}".encode()).digest(), records)


# -- attestation ---------------------------------------------------------------

@dataclass
class SessionTranscript:
    session_id: str
    genesis: bytes
    checkpoints: list[evidence.Checkpoint]
    bundle: snark.ProofBundle
    timings: dict = field(default_factory=dict)

    def records_bytes(self) -> bytes:
        return b"".join(cp.to_bytes() for cp in self.checkpoints)

    def manifest(self, files: dict | None = None) -> dict:
        return {
            "session_id": self.session_id,
            "config_digest": self.bundle.circuit_digest.hex(),
            "checkpoints": len(self.checkpoints),
            "genesis": self.genesis.hex(),
            "files": files or {},
            "created": self.bundle.header.get("created"),
        }

    def write(self, out_dir: Path | str) -> dict:
        """Write transcript records, proof bundle and a JSON manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tr, bd = out / "transcript.bin", out / "bundle.bin"
        tr.write_bytes(self.records_bytes())
        bundle_bytes = self.bundle.to_bytes()
        bd.write_bytes(bundle_bytes)
        files = {
            "transcript": {"path": tr.name, "sha256": hashlib.sha256(tr.read_bytes()).hexdigest()},
            "bundle": {"path": bd.name, "sha256": hashlib.sha256(bundle_bytes).hexdigest()},
        }
        manifest = self.manifest(files)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return manifest


def read_transcript(data: bytes) -> list[evidence.Checkpoint]:
    out, off = [], 0
    while off < len(data):
        cp, used = evidence.Checkpoint.from_bytes(data[off:])
        out.append(cp)
        off += used
    return out


def encode_features(index: int, features_ms: Sequence[float], population: PopulationParams) -> list[int]:
    """Fixed-point features; raises :class:`AttestError` naming the bad feature."""
    if len(features_ms) != population.m:
        raise AttestError(f"checkpoint {index}: expected {population.m} features, got {len(features_ms)}", index)
    out = []
    for j, v in enumerate(features_ms):
        try:
            out.append(encode_fixed_point(v))
        except EncodingError as exc:
            raise AttestError(f"checkpoint {index}: feature {j}: {exc}", index, j) from exc
    for j, (f, (a, b)) in enumerate(zip(out, population.bounds)):
        if not a <= f <= b:
            raise AttestError(
                f"checkpoint {index}: feature {j} = {features_ms[j]} ms outside the accepted "
                f"interval [{a}, {b}] (fixed point)", index, j)
    return out


def attest(
    stream: EventStream,
    pk: snark.ProvingKey,
    population: PopulationParams,
    swf_params: evidence.SWFParams | None = None,
    rng: random.Random | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> SessionTranscript:
    """Attest every window of ``stream``; one core proof per checkpoint."""
    config = pk.config
    if not stream.records:
        raise AttestError("no checkpoints")
    stream.validate()
    if population.m != config.m or population.mult != config.bounds_mult:
        raise AttestError("population parameters do not match the circuit configuration")
    swf_params = swf_params or evidence.SWFParams(chain_length=config.chain_length)
    if swf_params.chain_length != config.chain_length:
        raise AttestError("chain length differs from the circuit configuration")
    rand_scalar = (lambda: rng.randrange(jubjub.ORDER)) if rng else (lambda: secrets.randbelow(jubjub.ORDER))
    params = cm.default_params()

    genesis = evidence.genesis_hash(stream.nonce)
    prev_hash, tau_prev = genesis, 0
    c_tau_prev = cm.FeatureCommitment(jubjub.IDENTITY, 0, 0)
    checkpoints, entries = [], []
    timings = {"swf": 0.0, "prove": 0.0, "range": 0.0}
    n = len(stream.records)
    for i, rec in enumerate(stream.records, start=1):
        feats = encode_features(i, rec.features_ms, population)
        gap = rec.timestamp_ms - tau_prev
        if not cm.D_MIN_MS <= gap <= cm.D_MAX_MS:
            raise AttestError(f"checkpoint {i}: gap of {gap} ms outside [{cm.D_MIN_MS}, {cm.D_MAX_MS}]", i)

        t0 = time.perf_counter()
        chain = evidence.generate_swf(stream.nonce, swf_params, i)
        randomness = [rand_scalar() for _ in feats]
        cp = evidence.build_checkpoint(prev_hash, rec.delta, feats, randomness, chain,
                                       rec.timestamp_ms, rec.timestamp_ms // 1000, i, config.m)
        t1 = time.perf_counter()
        public = circuit.public_from_checkpoint(cp, population.mu, population.sigma)
        witness = circuit.witness_from_checkpoint(cp, config, tau_prev)
        try:
            ap = snark.prove(pk, public, witness, rng, index=i)
        except snark.ProvingError as exc:
            raise AttestError(f"checkpoint {i}: {exc}", i) from exc
        t2 = time.perf_counter()

        fcs = cp.feature_commitments()
        c_tau = cm.commit(rec.timestamp_ms, rand_scalar(), params)
        ap.range_proofs = [
            cm.range_prove(fcs, bounds=population.bounds, params=params, rng=rng),
            cm.temporal_prove(c_tau, c_tau_prev, params=params, rng=rng),
        ]
        ap.commitments = [c.to_bytes() for c in fcs] + [c_tau.to_bytes()]
        ap.record = cp.public().to_bytes()
        t3 = time.perf_counter()
        timings["swf"] += t1 - t0
        timings["prove"] += t2 - t1
        timings["range"] += t3 - t2

        checkpoints.append(cp.public())
        entries.append(ap)
        prev_hash, tau_prev, c_tau_prev = cp.hash, rec.timestamp_ms, c_tau
        if progress:
            progress(i, n)

    header = {
        "session_id": stream.session_id, "m": config.m, "genesis": genesis.hex(),
        "curve": snark.CURVE, "inner_curve": "babyjubjub", "config": config.to_dict(),
        "created": int(time.time()) if rng is None else 0,
    }
    bundle = snark.ProofBundle(config.digest(), header, entries)
    return SessionTranscript(stream.session_id, genesis, checkpoints, bundle, timings)


# -- verification --------------------------------------------------------------

@dataclass
class CheckpointVerdict:
    index: int
    ok: bool
    reasons: list[str] = field(default_factory=list)


@dataclass
class SessionVerdict:
    accepted: bool
    checkpoints: list[CheckpointVerdict]
    batch: bool = False

    @property
    def rejected_indices(self) -> list[int]:
        return [c.index for c in self.checkpoints if not c.ok]

    def report(self) -> str:
        lines = [f"checkpoint {c.index}: {'accept' if c.ok else 'reject'}"
                 + ("" if c.ok else f" ({'; '.join(c.reasons)})") for c in self.checkpoints]
        lines.append(f"session: {'accept' if self.accepted else 'reject'}")
        return "\n".join(lines)


class DigestMismatch(ValueError):
    pass


def _side_checks(entry: snark.AttestationProof, vk: snark.VerifyingKey, prev_hash: bytes,
                 c_tau_prev, population: PopulationParams | None, reference: PublicInputs | None) -> tuple[list[str], object]:
    """Everything except the pairing check; returns reasons and this entry's timestamp commitment."""
    cfg = vk.config
    reasons = []
    pub = entry.public_inputs
    try:
        pub.validate(cfg)
    except ValueError as exc:
        return [f"public inputs invalid: {exc}"], None
    try:
        cp, used = evidence.Checkpoint.from_bytes(entry.record)
        if used != len(entry.record) or cp.features is not None:
            raise evidence.EvidenceError("record must be a single public checkpoint")
    except evidence.EvidenceError as exc:
        return [f"bad checkpoint record: {exc}"], None
    if (cp.index, cp.prev_hash, cp.hash, cp.swf_root, cp.duration) != (
            entry.index, pub.prev_hash, pub.hash, pub.swf_root, pub.duration):
        reasons.append("record disagrees with public inputs")
    if pub.prev_hash != prev_hash:
        reasons.append("hash chain broken")
    if reference is not None and (pub.mu, pub.sigma) != (reference.mu, reference.sigma):
        reasons.append("population parameters change within the session")
    if population is not None and (tuple(pub.mu), tuple(pub.sigma)) != (population.mu, population.sigma):
        reasons.append("population parameters differ from the expected release")
    if len(entry.commitments) != cfg.m + 1 or len(entry.range_proofs) != 2:
        return reasons + ["wrong number of commitments or range proofs"], None
    try:
        pts = [jubjub.decompress(c) for c in entry.commitments]
    except jubjub.InvalidPoint as exc:
        return reasons + [f"bad commitment: {exc}"], None
    feats, c_tau = pts[:-1], pts[-1]
    if jubjub.compress(cm.aggregate(feats)) != cp.commitment:
        reasons.append("feature commitments do not sum to the checkpoint commitment")
    elif evidence.checkpoint_hash(cp.prev_hash, cp.delta, cp.commitment) != cp.hash:
        reasons.append("checkpoint hash does not match its contents")
    bounds = [circuit.feature_bounds(u, s, cfg.bounds_mult) for u, s in zip(pub.mu, pub.sigma)]
    if not cm.range_verify(feats, entry.range_proofs[0], bounds):
        reasons.append("feature range proof rejected")
    if not cm.temporal_verify(c_tau, c_tau_prev, entry.range_proofs[1]):
        reasons.append("temporal range proof rejected")
    return reasons, c_tau


def verify_bundle(
    vk: snark.VerifyingKey,
    bundle: snark.ProofBundle,
    batch: bool = False,
    rng_seed: bytes = b"",
    population: PopulationParams | None = None,
) -> SessionVerdict:
    """Per-checkpoint verdicts and the session verdict (accept iff all accept)."""
    if bundle.circuit_digest != vk.circuit_digest:
        raise DigestMismatch(
            f"bundle was made for circuit {bundle.circuit_digest.hex()[:16]}..., "
            f"key is for {vk.circuit_digest.hex()[:16]}...")
    try:
        prev_hash = bytes.fromhex(bundle.header["genesis"])
    except (KeyError, ValueError, TypeError):
        prev_hash = b""
    c_tau_prev = jubjub.IDENTITY
    verdicts = []
    reference = bundle.entries[0].public_inputs if bundle.entries else None
    for pos, entry in enumerate(bundle.entries, start=1):
        reasons, c_tau = _side_checks(entry, vk, prev_hash, c_tau_prev, population, reference)
        if entry.index != pos:
            reasons.append("checkpoint out of order")
        verdicts.append(CheckpointVerdict(entry.index, not reasons, reasons))
        prev_hash = entry.public_inputs.hash
        c_tau_prev = c_tau if c_tau is not None else jubjub.IDENTITY

    if not bundle.entries:
        return SessionVerdict(False, [], batch)
    items = [(e.public_inputs, e.proof) for e in bundle.entries]
    if batch and snark.batch_verify(vk, items, rng_seed):
        snark_ok = [True] * len(items)
    else:
        snark_ok = [snark.verify(vk, pub, pr) for pub, pr in items]
    for v, ok in zip(verdicts, snark_ok):
        if not ok:
            v.ok = False
            v.reasons.append("core proof rejected")
    return SessionVerdict(all(v.ok for v in verdicts), verdicts, batch)
