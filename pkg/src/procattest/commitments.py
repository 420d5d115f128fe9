"""Pedersen commitments on Baby Jubjub and two-sided range proofs.

``commit(v, r) = v*g + r*h`` where ``h`` is hashed to the curve from a fixed
tag, so nobody knows ``log_g h``.  A range proof for ``a <= v <= b`` is one
aggregated Bulletproofs+ proof that both ``v - a`` and ``b - v`` lie in
``[0, 2^n_bits)``; the verifier derives the two shifted commitments from the
public bounds.  Several features share one aggregated proof.
"""
from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

from . import bulletproofs as bp
from . import jubjub

D_MIN_MS = 25_000
D_MAX_MS = 120_000
TEMPORAL_BITS = 32

H_TAG = b"procattest/pedersen/h"


class RangeProofError(ValueError):
    """Raised when asked to prove a statement that is false."""


@dataclass(frozen=True)
class CommitmentParams:
    g: jubjub.Point
    h: jubjub.Point
    order: int = jubjub.ORDER
    curve: str = "babyjubjub"


@lru_cache(maxsize=None)
def default_params() -> CommitmentParams:
    return CommitmentParams(jubjub.BASE, jubjub.hash_to_curve(H_TAG))


@dataclass(frozen=True)
class FeatureCommitment:
    point: jubjub.Point
    value: int | None = field(default=None, repr=False)
    randomness: int | None = field(default=None, repr=False)

    def to_bytes(self) -> bytes:
        return jubjub.compress(self.point)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureCommitment":
        return cls(jubjub.decompress(data))

    def public(self) -> "FeatureCommitment":
        return FeatureCommitment(self.point)


CommitmentLike = Union[FeatureCommitment, tuple]


def _point(c: CommitmentLike) -> jubjub.Point:
    return c.point if isinstance(c, FeatureCommitment) else c


def commit(value: int, randomness: int, params: CommitmentParams | None = None) -> FeatureCommitment:
    params = params or default_params()
    pt = jubjub.msm([value % params.order, randomness % params.order], [params.g, params.h])
    return FeatureCommitment(pt, value, randomness % params.order)


def random_scalar(rng: random.Random) -> int:
    return rng.randrange(jubjub.ORDER)


def aggregate(commitments: Sequence[CommitmentLike]) -> jubjub.Point:
    """Group sum of the commitments; the empty sum is the identity."""
    return jubjub.sum_points(_point(c) for c in commitments)


def delta_commitment(c_next: CommitmentLike, c_prev: CommitmentLike) -> jubjub.Point:
    return jubjub.sub(_point(c_next), _point(c_prev))


def serialize(c: CommitmentLike) -> bytes:
    return jubjub.compress(_point(c))


# -- range proofs ----------------------------------------------------------------

@dataclass(frozen=True)
class RangeProof:
    proof: bytes
    bounds: tuple[tuple[int, int], ...]
    n_bits: int = 16

    def to_bytes(self) -> bytes:
        head = struct.pack("<BH", self.n_bits, len(self.bounds))
        body = b"".join(struct.pack("<qq", a, b) for a, b in self.bounds)
        return head + body + struct.pack("<I", len(self.proof)) + self.proof

    @classmethod
    def from_bytes(cls, data: bytes) -> "RangeProof":
        try:
            n_bits, count = struct.unpack_from("<BH", data, 0)
            off = 3
            bounds = []
            for _ in range(count):
                bounds.append(struct.unpack_from("<qq", data, off))
                off += 16
            (plen,) = struct.unpack_from("<I", data, off)
            off += 4
        except struct.error as exc:
            raise bp.ProofFormatError("truncated range proof") from exc
        proof = data[off:off + plen]
        if len(proof) != plen or off + plen != len(data):
            raise bp.ProofFormatError("range proof length mismatch")
        return cls(proof, tuple(tuple(b) for b in bounds), n_bits)


def _pad_pow2(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


def _shifted(params: CommitmentParams, points, bounds) -> list[jubjub.Point]:
    """Commitments to ``v - a`` and ``b - v`` for each feature, then padding."""
    out = []
    for pt, (a, b) in zip(points, bounds):
        out.append(jubjub.sub(pt, jubjub.mul(params.g, a)))
        out.append(jubjub.sub(jubjub.mul(params.g, b), pt))
    out += [jubjub.IDENTITY] * (_pad_pow2(len(out)) - len(out))
    return out


def _normalise(commitments, bounds):
    if isinstance(commitments, (FeatureCommitment, tuple)) and not (
        isinstance(commitments, tuple) and commitments and isinstance(commitments[0], (FeatureCommitment, tuple))
    ):
        commitments = [commitments]
    if bounds and isinstance(bounds[0], int):
        bounds = [tuple(bounds)]
    return list(commitments), [tuple(int(x) for x in b) for b in bounds]


def range_prove(
    commitments,
    openings: Sequence[tuple[int, int]] | None = None,
    bounds=(),
    n_bits: int = 16,
    params: CommitmentParams | None = None,
    rng: random.Random | None = None,
) -> RangeProof:
    """Prove ``a_j <= v_j <= b_j`` for every commitment.

    ``openings`` defaults to the values carried by ``FeatureCommitment``s.
    Raises :class:`RangeProofError` if any opening is out of range.
    """
    params = params or default_params()
    commitments, bounds = _normalise(commitments, bounds)
    if openings is None:
        openings = [(c.value, c.randomness) for c in commitments]
    elif openings and isinstance(openings[0], int):
        openings = [tuple(openings)]
    if not (len(commitments) == len(openings) == len(bounds)) or not commitments:
        raise ValueError("commitments, openings and bounds must have equal non-zero length")
    values, blinds = [], []
    for (v, r), (a, b), c in zip(openings, bounds, commitments):
        if b - a >= (1 << n_bits) or a > b:
            raise ValueError(f"bounds [{a}, {b}] do not fit in {n_bits} bits")
        if not a <= v <= b:
            raise RangeProofError(f"value {v} outside [{a}, {b}]")
        if commit(v, r, params).point != _point(c):
            raise RangeProofError("opening does not match commitment")
        values += [v - a, b - v]
        blinds += [r % params.order, (-r) % params.order]
    pad = _pad_pow2(len(values)) - len(values)
    values += [0] * pad
    blinds += [0] * pad
    shifted = _shifted(params, [_point(c) for c in commitments], bounds)
    gens = bp.generators(params.g, params.h, n_bits * len(values))
    proof = bp.prove(gens, shifted, values, blinds, n_bits, rng)
    return RangeProof(proof.to_bytes(), tuple(bounds), n_bits)


def range_verify(
    commitments,
    proof: RangeProof,
    bounds=None,
    params: CommitmentParams | None = None,
) -> bool:
    """Check ``proof`` against the given bounds (defaults to the ones it carries).

    Malformed input yields ``False``.
    """
    params = params or default_params()
    try:
        commitments, bounds = _normalise(commitments, bounds if bounds is not None else proof.bounds)
        if tuple(bounds) != tuple(proof.bounds) or len(bounds) != len(commitments):
            return False
        if any(b - a >= (1 << proof.n_bits) or a > b for a, b in bounds):
            return False
        for c in commitments:
            if not jubjub.in_subgroup(_point(c)):
                return False
        inner = bp.Proof.from_bytes(proof.proof)
        shifted = _shifted(params, [_point(c) for c in commitments], bounds)
        gens = bp.generators(params.g, params.h, proof.n_bits * len(shifted))
        return bp.verify(gens, shifted, inner, proof.n_bits)
    except (bp.ProofFormatError, ValueError, TypeError, IndexError):
        return False


# -- temporal deltas ---------------------------------------------------------------

def temporal_prove(
    c_next: FeatureCommitment,
    c_prev: FeatureCommitment,
    d_min: int = D_MIN_MS,
    d_max: int = D_MAX_MS,
    params: CommitmentParams | None = None,
    rng: random.Random | None = None,
) -> RangeProof:
    """Prove ``d_min <= tau_next - tau_prev <= d_max`` on the delta commitment."""
    params = params or default_params()
    delta = delta_commitment(c_next, c_prev)
    opening = (c_next.value - c_prev.value, (c_next.randomness - c_prev.randomness) % params.order)
    return range_prove(delta, opening, (d_min, d_max), TEMPORAL_BITS, params, rng)


def temporal_verify(
    c_next: CommitmentLike,
    c_prev: CommitmentLike,
    proof: RangeProof,
    d_min: int = D_MIN_MS,
    d_max: int = D_MAX_MS,
    params: CommitmentParams | None = None,
) -> bool:
    return range_verify(delta_commitment(c_next, c_prev), proof, (d_min, d_max), params)
