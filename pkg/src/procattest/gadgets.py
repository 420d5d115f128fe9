"""Circuit gadgets built on :mod:`procattest.r1cs`.

Bits are LCs constrained to {0, 1}.  Words and digests are lists of bits,
least-significant first.  Every gadget folds constant operands, so hashing
partly-constant data (IVs, padding) costs nothing for the constant part.
"""
from __future__ import annotations

from typing import Sequence

from . import jubjub, poseidon
from .field import P
from .r1cs import LC, ConstraintSystem, lc_sum

Bits = list  # list[LC]


# -- bits ----------------------------------------------------------------------

def alloc_bit(cs: ConstraintSystem, value: int) -> LC:
    b = cs.alloc(value & 1)
    cs.enforce(b, 1 - b, 0)
    return b


def pack(cs: ConstraintSystem, bits: Sequence[LC]) -> LC:
    return lc_sum((b.scale(1 << i) for i, b in enumerate(bits)), cs.record)


def to_bits(cs: ConstraintSystem, x: LC, n: int) -> Bits:
    """Decompose ``x`` into ``n`` boolean LCs; unsatisfiable if x >= 2^n."""
    if x.const:
        return [cs.const((x.value >> i) & 1) for i in range(n)]
    bits = [alloc_bit(cs, (x.value >> i) & 1) for i in range(n)]
    cs.enforce(pack(cs, bits), 1, x)
    return bits


def assert_le_const(cs: ConstraintSystem, bits: Sequence[LC], bound: int) -> None:
    """Enforce ``pack(bits) <= bound`` for boolean ``bits`` (LSB first)."""
    n = len(bits)
    if bound >= (1 << n) - 1:
        return
    # Scan from the top: ``tight`` is 1 while every higher bit equals bound's.
    tight = cs.const(1)
    for i in range(n - 1, -1, -1):
        if (bound >> i) & 1:
            tight = cs.mul(tight, bits[i])
        else:
            # where bound has a 0 and we are still tight, the bit must be 0
            cs.enforce(tight, bits[i], 0)


def to_bits_canonical(cs: ConstraintSystem, x: LC) -> Bits:
    """Unique 254-bit decomposition of a field element."""
    bits = to_bits(cs, x, P.bit_length())
    if not x.const:
        assert_le_const(cs, bits, P - 1)
    return bits


def xor(cs: ConstraintSystem, a: LC, b: LC) -> LC:
    if a.const:
        return b if a.value == 0 else 1 - b
    if b.const:
        return a if b.value == 0 else 1 - a
    out = cs.alloc(a.value ^ b.value)
    cs.enforce(a.scale(2), b, a + b - out)
    return out


def and_(cs: ConstraintSystem, a: LC, b: LC) -> LC:
    return cs.mul(a, b)


def xor3(cs: ConstraintSystem, a: LC, b: LC, c: LC) -> LC:
    return xor(cs, xor(cs, a, b), c)


def ch(cs: ConstraintSystem, e: LC, f: LC, g: LC) -> LC:
    """``(e and f) xor (not e and g)`` as ``e*(f-g) + g``."""
    if e.const:
        return f if e.value else g
    if f.const and g.const:
        return (e.scale(f.value - g.value) + g.value)
    out = cs.alloc(g.value + e.value * (f.value - g.value))
    cs.enforce(e, f - g, out - g)
    return out


def maj(cs: ConstraintSystem, a: LC, b: LC, c: LC) -> LC:
    consts = [x for x in (a, b, c) if x.const]
    vars_ = [x for x in (a, b, c) if not x.const]
    if len(consts) >= 2:
        s = sum(x.value for x in consts)
        if s == 0:
            return cs.const(0)
        if not vars_:
            return cs.const(1 if s >= 2 else 0)
        if s == 2:
            return cs.const(1)
        return vars_[0]
    if len(consts) == 1:
        x, y = vars_
        prod = cs.mul(x, y)
        return prod if consts[0].value == 0 else x + y - prod
    # maj = ab + c(a xor b) = ab + c(a + b - 2ab)
    ab = cs.mul(a, b)
    out = cs.alloc((a.value & b.value) | (a.value & c.value) | (b.value & c.value))
    cs.enforce(c, a + b - ab.scale(2), out - ab)
    return out


# -- 32-bit words ---------------------------------------------------------------

def const_word(cs: ConstraintSystem, value: int) -> Bits:
    return [cs.const((value >> i) & 1) for i in range(32)]


def word_value(word: Sequence[LC]) -> int:
    return sum(b.value << i for i, b in enumerate(word))


def rotr(word: Bits, n: int) -> Bits:
    return word[n:] + word[:n]


def shr(cs: ConstraintSystem, word: Bits, n: int) -> Bits:
    return word[n:] + [cs.const(0)] * n


def add_words(cs: ConstraintSystem, terms: Sequence[LC], max_sum: int) -> Bits:
    """Reduce a packed sum of words modulo 2^32 into fresh bits.

    ``terms`` are packed LCs whose integer sum is at most ``max_sum``.
    """
    total = lc_sum(terms, cs.record)
    if total.const:
        return const_word(cs, total.value % (1 << 32))
    carry_bits = max(0, (max_sum >> 32).bit_length())
    bits = to_bits(cs, total, 32 + carry_bits)
    return bits[:32]


def _xor_words3(cs, x, y, z) -> Bits:
    return [xor3(cs, a, b, c) for a, b, c in zip(x, y, z)]


# -- SHA-256 -------------------------------------------------------------------

SHA256_IV = (
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A,
    0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

SHA256_K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)

_MASK32 = (1 << 32) - 1


def sha256_compress(cs: ConstraintSystem, state: Sequence[Bits], block: Sequence[Bits]) -> list[Bits]:
    """One compression of the 8-word ``state`` with the 16-word ``block``."""
    w = list(block)
    for t in range(16, 64):
        x15, x2 = w[t - 15], w[t - 2]
        s0 = [xor3(cs, a, b, c) for a, b, c in zip(rotr(x15, 7), rotr(x15, 18), shr(cs, x15, 3))]
        s1 = [xor3(cs, a, b, c) for a, b, c in zip(rotr(x2, 17), rotr(x2, 19), shr(cs, x2, 10))]
        terms = [pack(cs, s1), pack(cs, w[t - 7]), pack(cs, s0), pack(cs, w[t - 16])]
        w.append(add_words(cs, terms, 4 * _MASK32))

    a, b, c, d, e, f, g, h = state
    for t in range(64):
        big_s1 = _xor_words3(cs, rotr(e, 6), rotr(e, 11), rotr(e, 25))
        chv = [ch(cs, x, y, z) for x, y, z in zip(e, f, g)]
        big_s0 = _xor_words3(cs, rotr(a, 2), rotr(a, 13), rotr(a, 22))
        mj = [maj(cs, x, y, z) for x, y, z in zip(a, b, c)]
        t1 = [pack(cs, h), pack(cs, big_s1), pack(cs, chv), cs.const(SHA256_K[t]), pack(cs, w[t])]
        new_e = add_words(cs, t1 + [pack(cs, d)], 6 * _MASK32)
        new_a = add_words(cs, t1 + [pack(cs, big_s0), pack(cs, mj)], 7 * _MASK32)
        h, g, f, e = g, f, e, new_e
        d, c, b, a = c, b, a, new_a

    out = []
    for old, new in zip(state, (a, b, c, d, e, f, g, h)):
        out.append(add_words(cs, [pack(cs, old), pack(cs, new)], 2 * _MASK32))
    return out


def bytes_bits_to_words(bits: Sequence[LC]) -> list[Bits]:
    """Byte-ordered bits (bit j of byte i at 8i+j) to big-endian words."""
    words = []
    for k in range(len(bits) // 32):
        word = []
        for t in range(32):
            byte = 4 * k + 3 - t // 8
            word.append(bits[8 * byte + t % 8])
        words.append(word)
    return words


def words_to_bytes_bits(words: Sequence[Bits]) -> Bits:
    out = [None] * (32 * len(words))
    for k, word in enumerate(words):
        for t in range(32):
            byte = 4 * k + 3 - t // 8
            out[8 * byte + t % 8] = word[t]
    return out


def const_bytes_bits(cs: ConstraintSystem, data: bytes) -> Bits:
    return [cs.const((byte >> j) & 1) for byte in data for j in range(8)]


def alloc_bytes_bits(cs: ConstraintSystem, data: bytes) -> Bits:
    return [alloc_bit(cs, (byte >> j) & 1) for byte in data for j in range(8)]


def bits_value_bytes(bits: Sequence[LC]) -> bytes:
    return bytes(
        sum(bits[8 * i + j].value << j for j in range(8)) for i in range(len(bits) // 8)
    )


def sha256(cs: ConstraintSystem, message_bits: Sequence[LC]) -> Bits:
    """SHA-256 of a fixed-length message given as byte-ordered bits."""
    n = len(message_bits)
    if n % 8:
        raise ValueError("message must be whole bytes")
    nbytes = n // 8
    pad_len = (55 - nbytes) % 64 + 1
    padding = b"\x80" + b"\x00" * (pad_len - 1) + (8 * nbytes).to_bytes(8, "big")
    bits = list(message_bits) + const_bytes_bits(cs, padding)
    words = bytes_bits_to_words(bits)
    state = [const_word(cs, v) for v in SHA256_IV]
    for i in range(0, len(words), 16):
        state = sha256_compress(cs, state, words[i:i + 16])
    return words_to_bytes_bits(state)


# -- Poseidon ------------------------------------------------------------------

def poseidon_permute(cs: ConstraintSystem, state: Sequence[LC]) -> list[LC]:
    prm = poseidon.params()
    mds = prm.mds
    half = poseidon.FULL_ROUNDS // 2
    s = list(state)
    k = 0
    for r in range(poseidon.FULL_ROUNDS + poseidon.PARTIAL_ROUNDS):
        rc = prm.round_constants[k:k + 3]
        k += 3
        s = [x + c for x, c in zip(s, rc)]
        full = r < half or r >= half + poseidon.PARTIAL_ROUNDS
        lanes = range(3) if full else range(1)
        for i in lanes:
            x = s[i]
            x2 = cs.square(x)
            x4 = cs.square(x2)
            s[i] = cs.mul(x4, x)
        s = [lc_sum((s[j].scale(mds[i][j]) for j in range(3)), cs.record) for i in range(3)]
    return s


def poseidon_hash2(cs: ConstraintSystem, left: LC, right: LC) -> LC:
    return poseidon_permute(cs, [cs.const(0), left, right])[0]


def select(cs: ConstraintSystem, bit: LC, when_zero: LC, when_one: LC) -> LC:
    """``when_one`` if bit else ``when_zero`` (one constraint)."""
    return when_zero + cs.mul(bit, when_one - when_zero)


def merkle_root(cs: ConstraintSystem, leaf: LC, index_bits: Sequence[LC], siblings: Sequence[LC]) -> LC:
    """Root reached from ``leaf`` along ``siblings`` (bottom-up)."""
    cur = leaf
    for bit, sib in zip(index_bits, siblings):
        left = select(cs, bit, cur, sib)
        right = cur + sib - left
        cur = poseidon_hash2(cs, left, right)
    return cur


# -- Baby Jubjub ----------------------------------------------------------------

def point_add(cs: ConstraintSystem, p1: tuple[LC, LC], p2: tuple[LC, LC]) -> tuple[LC, LC]:
    """Complete twisted Edwards addition (six constraints when both vary)."""
    x1, y1 = p1
    x2, y2 = p2
    beta = cs.mul(x1, y2)
    gamma = cs.mul(y1, x2)
    delta = cs.mul(y1 - x1.scale(jubjub.A), x2 + y2)
    tau = cs.mul(beta, gamma)
    dt = tau.value * jubjub.D % P
    x3v = (beta.value + gamma.value) * pow((1 + dt) % P, -1, P) % P
    y3v = (delta.value + jubjub.A * beta.value - gamma.value) * pow((1 - dt) % P, -1, P) % P
    x3 = cs.alloc(x3v)
    y3 = cs.alloc(y3v)
    cs.enforce(x3, tau.scale(jubjub.D) + 1, beta + gamma)
    cs.enforce(y3, 1 - tau.scale(jubjub.D), delta + beta.scale(jubjub.A) - gamma)
    return x3, y3


def _lookup3_pair(cs, bits, xs, ys):
    b0, b1, b2 = bits
    b01 = cs.mul(b0, b1)

    def combine(t):
        lo = (b0.scale(t[1] - t[0]) + b1.scale(t[2] - t[0])
              + b01.scale(t[3] - t[2] - t[1] + t[0]) + t[0])
        hi = ((t[4] - t[0]) + b0.scale(t[5] - t[4] - t[1] + t[0])
              + b1.scale(t[6] - t[4] - t[2] + t[0])
              + b01.scale(t[7] - t[6] - t[5] + t[4] - t[3] + t[2] + t[1] - t[0]))
        return lo + cs.mul(b2, hi)

    return combine(xs), combine(ys)


_WINDOW_CACHE: dict = {}


def _window_tables(base: jubjub.Point, windows: int):
    key = (base, windows)
    if key not in _WINDOW_CACHE:
        tables = []
        step = base
        for _ in range(windows):
            pts = [jubjub.IDENTITY]
            for _ in range(7):
                pts.append(jubjub.add(pts[-1], step))
            tables.append(([pt[0] for pt in pts], [pt[1] for pt in pts]))
            step = jubjub.mul_raw(step, 8)
        _WINDOW_CACHE[key] = tables
    return _WINDOW_CACHE[key]


def fixed_base_mul(cs: ConstraintSystem, base: jubjub.Point, bits: Sequence[LC]) -> tuple[LC, LC]:
    """``pack(bits) * base`` using 3-bit windowed constant lookups."""
    bits = list(bits)
    while len(bits) % 3:
        bits.append(cs.const(0))
    windows = len(bits) // 3
    tables = _window_tables(base, windows)
    acc = None
    for w in range(windows):
        xs, ys = tables[w]
        pt = _lookup3_pair(cs, bits[3 * w:3 * w + 3], xs, ys)
        acc = pt if acc is None else point_add(cs, acc, pt)
    return acc


def compress_point_bits(cs: ConstraintSystem, pt: tuple[LC, LC]) -> Bits:
    """Byte-ordered bits of the 32-byte compressed encoding of ``pt``."""
    x, y = pt
    y_bits = to_bits_canonical(cs, y)
    x_bits = to_bits_canonical(cs, x)
    return y_bits + [cs.const(0), x_bits[0]]
