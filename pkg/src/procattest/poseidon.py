"""Poseidon permutation over the BN254 scalar field (x^5 S-box, width 3).

Round constants and the MDS matrix are regenerated with the Grain LFSR
procedure of the Poseidon reference implementation, so the outputs agree
with circomlib's ``Poseidon(2)`` template.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import gmpy2

from .field import FIELD_BITS, P

WIDTH = 3
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 57
ALPHA = 5

PARAMS_ID = f"poseidon-bn254-x{ALPHA}-t{WIDTH}-rf{FULL_ROUNDS}-rp{PARTIAL_ROUNDS}"


class _Grain:
    """Self-shrinking Grain LFSR used by the reference parameter generator."""

    def __init__(self, field: int, sbox: int, n: int, t: int, r_f: int, r_p: int):
        bits = (
            f"{field:02b}{sbox:04b}{n:012b}{t:012b}{r_f:010b}{r_p:010b}" + "1" * 30
        )
        self.state = [int(b) for b in bits]
        for _ in range(160):
            self._clock()

    def _clock(self) -> int:
        s = self.state
        bit = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0]
        s.pop(0)
        s.append(bit)
        return bit

    def bit(self) -> int:
        while True:
            first = self._clock()
            second = self._clock()
            if first:
                return second

    def bits_to_int(self, n: int) -> int:
        out = 0
        for _ in range(n):
            out = (out << 1) | self.bit()
        return out


@dataclass(frozen=True)
class PoseidonParams:
    round_constants: tuple[int, ...]
    mds: tuple[tuple[int, ...], ...]

    def constants_for_round(self, r: int) -> tuple[int, ...]:
        return self.round_constants[r * WIDTH:(r + 1) * WIDTH]


@lru_cache(maxsize=None)
def params() -> PoseidonParams:
    grain = _Grain(1, 0, FIELD_BITS, WIDTH, FULL_ROUNDS, PARTIAL_ROUNDS)
    constants = []
    for _ in range((FULL_ROUNDS + PARTIAL_ROUNDS) * WIDTH):
        c = grain.bits_to_int(FIELD_BITS)
        while c >= P:
            c = grain.bits_to_int(FIELD_BITS)
        constants.append(c)
    while True:
        vals = [grain.bits_to_int(FIELD_BITS) % P for _ in range(2 * WIDTH)]
        if len(set(vals)) == len(vals):
            break
    xs, ys = vals[:WIDTH], vals[WIDTH:]
    mds = tuple(tuple(pow(x + y, -1, P) for y in ys) for x in xs)
    return PoseidonParams(tuple(constants), mds)


@lru_cache(maxsize=None)
def _mpz_tables():
    prm = params()
    rc = [gmpy2.mpz(c) for c in prm.round_constants]
    m = [[gmpy2.mpz(v) for v in row] for row in prm.mds]
    return rc, m


def permute(state: list[int]) -> list[int]:
    """Apply the full permutation to a width-3 state."""
    if len(state) != WIDTH:
        raise ValueError("Poseidon state must have width 3")
    rc, m = _mpz_tables()
    p = gmpy2.mpz(P)
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = m
    a, b, c = (gmpy2.mpz(x) for x in state)
    half = FULL_ROUNDS // 2
    k = 0
    for r in range(FULL_ROUNDS + PARTIAL_ROUNDS):
        a += rc[k]
        b += rc[k + 1]
        c += rc[k + 2]
        k += 3
        t = a * a % p
        a = t * t * a % p
        if r < half or r >= half + PARTIAL_ROUNDS:
            t = b * b % p
            b = t * t * b % p
            t = c * c % p
            c = t * t * c % p
        a, b, c = (
            (m00 * a + m01 * b + m02 * c) % p,
            (m10 * a + m11 * b + m12 * c) % p,
            (m20 * a + m21 * b + m22 * c) % p,
        )
    return [int(a), int(b), int(c)]


def hash2(left: int, right: int) -> int:
    """2-to-1 compression: first lane of ``permute([0, left, right])``."""
    return permute([0, left, right])[0]
