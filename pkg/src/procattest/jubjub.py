"""Baby Jubjub: the twisted Edwards curve embedded in the BN254 scalar field.

Points are handled as affine ``(x, y)`` int tuples at the API boundary and
as extended coordinates internally.  The compressed encoding is 32 bytes:
``y`` little-endian with bit 255 carrying the parity of ``x``.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache
from typing import Iterable, Sequence

import gmpy2

from .field import P

A = 168700
D = 168696
# Prime order of the large subgroup; cofactor 8.
ORDER = 2736030358979909402780800718157159386076813972158567259200215660948447373041
COFACTOR = 8

BASE = (
    5299619240641551281634865583518297030282874472190772894086521144482721001553,
    16950150798460657717958625567821834550301663161624707787222815936182638968203,
)
IDENTITY = (0, 1)
POINT_BYTES = 32

Point = tuple[int, int]

_p = gmpy2.mpz(P)
_a = gmpy2.mpz(A)
_d = gmpy2.mpz(D)


class InvalidPoint(ValueError):
    pass


def is_on_curve(pt: Point) -> bool:
    x, y = pt
    if not (0 <= x < P and 0 <= y < P):
        return False
    x2, y2 = x * x % P, y * y % P
    return (A * x2 + y2 - 1 - D * x2 * y2) % P == 0


# -- extended coordinates ----------------------------------------------------

def _ext(pt: Point):
    x, y = gmpy2.mpz(pt[0]), gmpy2.mpz(pt[1])
    return (x, y, gmpy2.mpz(1), x * y % _p)


_EXT_ZERO = (gmpy2.mpz(0), gmpy2.mpz(1), gmpy2.mpz(1), gmpy2.mpz(0))


def _add(p1, p2):
    x1, y1, z1, t1 = p1
    x2, y2, z2, t2 = p2
    a = x1 * x2 % _p
    b = y1 * y2 % _p
    c = _d * t1 % _p * t2 % _p
    d = z1 * z2 % _p
    e = ((x1 + y1) * (x2 + y2) - a - b) % _p
    f = d - c
    g = d + c
    h = b - _a * a
    return (e * f % _p, g * h % _p, f * g % _p, e * h % _p)


def _dbl(p1):
    x, y, z, _ = p1
    a = x * x % _p
    b = y * y % _p
    c = 2 * z * z % _p
    da = _a * a % _p
    e = ((x + y) * (x + y) - a - b) % _p
    g = da + b
    f = g - c
    h = da - b
    return (e * f % _p, g * h % _p, f * g % _p, e * h % _p)


def _neg(p1):
    x, y, z, t = p1
    return (-x % _p, y, z, -t % _p)


def _affine(p1) -> Point:
    x, y, z, _ = p1
    zi = gmpy2.invert(z, _p)
    return (int(x * zi % _p), int(y * zi % _p))


def _batch_affine(points) -> list[Point]:
    """Normalise many extended points with a single inversion."""
    zs = [pt[2] for pt in points]
    prefix = []
    acc = gmpy2.mpz(1)
    for z in zs:
        prefix.append(acc)
        acc = acc * z % _p
    inv_acc = gmpy2.invert(acc, _p)
    out = [None] * len(points)
    for i in range(len(points) - 1, -1, -1):
        zi = inv_acc * prefix[i] % _p
        inv_acc = inv_acc * zs[i] % _p
        x, y, _, _ = points[i]
        out[i] = (int(x * zi % _p), int(y * zi % _p))
    return out


def _mul_ext(p1, k: int):
    k = int(k)
    if k < 0:
        return _mul_ext(_neg(p1), -k)
    # 4-bit fixed window
    table = [_EXT_ZERO, p1]
    for _ in range(14):
        table.append(_add(table[-1], p1))
    acc = _EXT_ZERO
    nibbles = []
    while k:
        nibbles.append(k & 15)
        k >>= 4
    for nib in reversed(nibbles):
        acc = _dbl(_dbl(_dbl(_dbl(acc))))
        if nib:
            acc = _add(acc, table[nib])
    return acc


# -- public point API --------------------------------------------------------

def add(p1: Point, p2: Point) -> Point:
    return _affine(_add(_ext(p1), _ext(p2)))


def neg(pt: Point) -> Point:
    return (-pt[0] % P, pt[1])


def sub(p1: Point, p2: Point) -> Point:
    return add(p1, neg(p2))


def mul(pt: Point, k: int) -> Point:
    """Scalar multiplication of a prime-order point (scalar reduced mod ORDER)."""
    return _affine(_mul_ext(_ext(pt), k % ORDER))


def mul_raw(pt: Point, k: int) -> Point:
    """Scalar multiplication without reducing the scalar modulo the subgroup order."""
    return _affine(_mul_ext(_ext(pt), k))


def in_subgroup(pt: Point) -> bool:
    return is_on_curve(pt) and _affine(_mul_ext(_ext(pt), ORDER)) == IDENTITY


def sum_points(points: Iterable[Point]) -> Point:
    acc = _EXT_ZERO
    for pt in points:
        acc = _add(acc, _ext(pt))
    return _affine(acc)


def msm(scalars: Sequence[int], points: Sequence[Point]) -> Point:
    """Multi-scalar multiplication (Pippenger buckets for large inputs)."""
    if len(scalars) != len(points):
        raise ValueError("scalar/point length mismatch")
    pairs = [(int(s) % ORDER, pt) for s, pt in zip(scalars, points)]
    pairs = [(s, pt) for s, pt in pairs if s]
    if not pairs:
        return IDENTITY
    if len(pairs) < 8:
        acc = _EXT_ZERO
        for s, pt in pairs:
            acc = _add(acc, _mul_ext(_ext(pt), s))
        return _affine(acc)
    n = len(pairs)
    c = max(2, min(12, n.bit_length() - 2))
    mask = (1 << c) - 1
    ext_points = [_ext(pt) for _, pt in pairs]
    scal = [s for s, _ in pairs]
    windows = (ORDER.bit_length() + c - 1) // c
    result = _EXT_ZERO
    for w in range(windows - 1, -1, -1):
        for _ in range(c):
            result = _dbl(result)
        shift = w * c
        buckets: list = [None] * (mask + 1)
        for s, pt in zip(scal, ext_points):
            idx = (s >> shift) & mask
            if idx:
                b = buckets[idx]
                buckets[idx] = pt if b is None else _add(b, pt)
        running = _EXT_ZERO
        window_sum = _EXT_ZERO
        for idx in range(mask, 0, -1):
            b = buckets[idx]
            if b is not None:
                running = _add(running, b)
            window_sum = _add(window_sum, running)
        result = _add(result, window_sum)
    return _affine(result)


# -- encoding ----------------------------------------------------------------

def _sqrt(n: int) -> int | None:
    """Tonelli-Shanks square root modulo P, or None for non-residues."""
    n %= P
    if n == 0:
        return 0
    if pow(n, (P - 1) // 2, P) != 1:
        return None
    q, s = P - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 5  # smallest quadratic non-residue mod P
    m, c, t, r = s, pow(z, q, P), pow(n, q, P), pow(n, (q + 1) // 2, P)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % P
            i += 1
        b = pow(c, 1 << (m - i - 1), P)
        m, c = i, b * b % P
        t, r = t * c % P, r * b % P
    return r


def x_from_y(y: int, parity: int) -> int | None:
    y2 = y * y % P
    den = (A - D * y2) % P
    if den == 0:
        return None
    x = _sqrt((1 - y2) * pow(den, -1, P))
    if x is None:
        return None
    if x & 1 != parity:
        x = (P - x) % P
    if x & 1 != parity:
        return None
    return x


def compress(pt: Point) -> bytes:
    x, y = pt
    return (y | ((x & 1) << 255)).to_bytes(32, "little")


def decompress(data: bytes, check_subgroup: bool = True) -> Point:
    if len(data) != POINT_BYTES:
        raise InvalidPoint("compressed point must be 32 bytes")
    raw = int.from_bytes(data, "little")
    parity = raw >> 255
    y = raw & ((1 << 255) - 1)
    if y >= P:
        raise InvalidPoint("non-canonical y coordinate")
    x = x_from_y(y, parity)
    if x is None:
        raise InvalidPoint("not a curve point")
    pt = (x, y)
    if check_subgroup and not in_subgroup(pt):
        raise InvalidPoint("point outside the prime-order subgroup")
    return pt


def hash_to_curve(tag: bytes) -> Point:
    """Try-and-increment map of a domain tag into the prime-order subgroup."""
    ctr = 0
    while True:
        digest = hashlib.sha256(b"babyjubjub-h2c" + tag + ctr.to_bytes(4, "little")).digest()
        y = int.from_bytes(digest, "little") % P
        x = x_from_y(y, 0)
        if x is not None:
            pt = mul_raw((x, y), COFACTOR)
            if pt != IDENTITY:
                return pt
        ctr += 1


@lru_cache(maxsize=None)
def generator_vector(tag: bytes, n: int) -> tuple[Point, ...]:
    return tuple(hash_to_curve(tag + i.to_bytes(4, "little")) for i in range(n))
