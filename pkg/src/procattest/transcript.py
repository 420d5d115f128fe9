"""Fiat-Shamir transcript over SHA-256.

Every absorbed item is framed as ``len(label) | label | len(data) | data`` so
that distinct message sequences never collide.  Challenges are reduced from
64 bytes of output to keep the modular bias negligible.
"""
from __future__ import annotations

import hashlib

from . import jubjub


class Transcript:
    def __init__(self, domain: bytes):
        self._h = hashlib.sha256(b"procattest/transcript/v1")
        self.append(b"domain", domain)

    def append(self, label: bytes, data: bytes) -> None:
        self._h.update(len(label).to_bytes(4, "little") + label)
        self._h.update(len(data).to_bytes(8, "little") + data)

    def append_int(self, label: bytes, value: int, size: int = 32) -> None:
        self.append(label, int(value).to_bytes(size, "little"))

    def append_point(self, label: bytes, pt: jubjub.Point) -> None:
        self.append(label, jubjub.compress(pt))

    def challenge_bytes(self, label: bytes) -> bytes:
        self.append(b"challenge", label)
        out = self._h.copy().digest()
        self.append(b"challenge-output", out)
        return out

    def challenge_scalar(self, label: bytes, modulus: int) -> int:
        """Uniform non-zero scalar modulo ``modulus``."""
        ctr = 0
        while True:
            seed = self.challenge_bytes(label + ctr.to_bytes(2, "little"))
            wide = hashlib.sha256(seed + b"\x00").digest() + hashlib.sha256(seed + b"\x01").digest()
            c = int.from_bytes(wide, "little") % modulus
            if c:
                return c
            ctr += 1
