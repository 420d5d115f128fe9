"""Scalar field of BN254 and small helpers shared by the native and in-circuit code."""
from __future__ import annotations

import hashlib

# Order of the BN254 pairing groups; also the base field of Baby Jubjub.
P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
FIELD_BITS = 254


def inv(x: int) -> int:
    return pow(x, -1, P)


def digest_to_limbs(digest: bytes) -> tuple[int, int]:
    """Split a 32-byte digest into (low, high) 128-bit little-endian limbs."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    return int.from_bytes(digest[:16], "little"), int.from_bytes(digest[16:], "little")


def limbs_to_digest(lo: int, hi: int) -> bytes:
    return lo.to_bytes(16, "little") + hi.to_bytes(16, "little")


def hash_to_scalar(modulus: int, *parts: bytes) -> int:
    """Uniform-ish scalar from a SHA-256 based expansion (64 bytes reduced mod modulus)."""
    h = hashlib.sha256()
    for part in parts:
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    seed = h.digest()
    wide = hashlib.sha256(seed + b"\x00").digest() + hashlib.sha256(seed + b"\x01").digest()
    return int.from_bytes(wide, "little") % modulus
