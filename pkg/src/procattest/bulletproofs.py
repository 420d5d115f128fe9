"""Aggregated Bulletproofs+ range proofs over Baby Jubjub.

Proves that each of ``M`` Pedersen commitments ``C_j = v_j*g + r_j*h``
opens to ``0 <= v_j < 2^N``.  ``N`` and ``M`` must be powers of two.  The
proof is ``2*log2(N*M) + 3`` points and 3 scalars.

The prover never folds generator points explicitly.  It keeps, for each
original generator, the scalar it would carry in the folded vector, so
every round costs one multi-scalar multiplication over the original
generators instead of ``N*M`` point multiplications.
"""
from __future__ import annotations

import random
import secrets
from dataclasses import dataclass
from typing import Sequence

from . import jubjub
from .jubjub import ORDER as Q
from .transcript import Transcript

SCALAR_BYTES = 32
_DOMAIN = b"procattest/bulletproofs-plus/v1"


class ProofFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Generators:
    g: jubjub.Point
    h: jubjub.Point
    gs: tuple[jubjub.Point, ...]
    hs: tuple[jubjub.Point, ...]


def generators(g: jubjub.Point, h: jubjub.Point, size: int) -> Generators:
    return Generators(
        g, h,
        jubjub.generator_vector(b"procattest/bp+/G", size),
        jubjub.generator_vector(b"procattest/bp+/H", size),
    )


@dataclass(frozen=True)
class Proof:
    A: jubjub.Point
    A1: jubjub.Point
    B: jubjub.Point
    r1: int
    s1: int
    d1: int
    L: tuple[jubjub.Point, ...]
    R: tuple[jubjub.Point, ...]

    def to_bytes(self) -> bytes:
        out = [jubjub.compress(self.A), jubjub.compress(self.A1), jubjub.compress(self.B)]
        out += [x.to_bytes(SCALAR_BYTES, "little") for x in (self.r1, self.s1, self.d1)]
        for lp, rp in zip(self.L, self.R):
            out += [jubjub.compress(lp), jubjub.compress(rp)]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        fixed = 6 * 32
        if len(data) < fixed or (len(data) - fixed) % 64:
            raise ProofFormatError("bad range proof length")
        chunks = [data[i:i + 32] for i in range(0, len(data), 32)]
        try:
            pts = [jubjub.decompress(c) for c in chunks[:3]]
            lr = [jubjub.decompress(c) for c in chunks[6:]]
        except jubjub.InvalidPoint as exc:
            raise ProofFormatError(str(exc)) from exc
        scalars = [int.from_bytes(c, "little") for c in chunks[3:6]]
        if any(s >= Q for s in scalars):
            raise ProofFormatError("non-canonical scalar")
        return cls(pts[0], pts[1], pts[2], *scalars, tuple(lr[0::2]), tuple(lr[1::2]))


def _is_pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def _start(gens: Generators, commitments, n_bits: int) -> Transcript:
    tr = Transcript(_DOMAIN)
    tr.append_point(b"g", gens.g)
    tr.append_point(b"h", gens.h)
    tr.append_int(b"N", n_bits, 4)
    tr.append_int(b"M", len(commitments), 4)
    for c in commitments:
        tr.append_point(b"C", c)
    return tr


def _d_vector(z: int, n_bits: int, m: int) -> list[int]:
    z2 = z * z % Q
    out = []
    zp = z2
    for _ in range(m):
        acc = zp
        for _ in range(n_bits):
            out.append(acc)
            acc = acc * 2 % Q
        zp = zp * z2 % Q
    return out


def prove(
    gens: Generators,
    commitments: Sequence[jubjub.Point],
    values: Sequence[int],
    blindings: Sequence[int],
    n_bits: int,
    rng: random.Random | None = None,
) -> Proof:
    m = len(values)
    n = n_bits * m
    if not (_is_pow2(n_bits) and _is_pow2(m)):
        raise ValueError("bit width and aggregation size must be powers of two")
    if len(gens.gs) < n:
        raise ValueError("not enough generators")
    for v in values:
        if not 0 <= v < (1 << n_bits):
            raise ValueError("value outside the provable range")
    rand = (lambda: rng.randrange(1, Q)) if rng is not None else (lambda: secrets.randbelow(Q - 1) + 1)
    gs, hs = gens.gs[:n], gens.hs[:n]

    tr = _start(gens, commitments, n_bits)
    a_l = [(v >> i) & 1 for v in values for i in range(n_bits)]
    a_r = [(b - 1) % Q for b in a_l]
    alpha = rand()
    A = jubjub.msm(a_l + a_r + [alpha], list(gs) + list(hs) + [gens.h])
    tr.append_point(b"A", A)
    y = tr.challenge_scalar(b"y", Q)
    z = tr.challenge_scalar(b"z", Q)

    y_pow = [1]
    for _ in range(n + 1):
        y_pow.append(y_pow[-1] * y % Q)
    d = _d_vector(z, n_bits, m)
    a = [(x - z) % Q for x in a_l]
    b = [(a_r[i] + d[i] * y_pow[n - i] + z) % Q for i in range(n)]
    z2 = z * z % Q
    zp = 1
    for r in blindings:
        zp = zp * z2 % Q
        alpha = (alpha + zp * r % Q * y_pow[n + 1]) % Q

    # implicit generator folding: current G'[k mod size] = sum cg[k]*gs[k]
    cg = [1] * n
    chh = [1] * n
    size = n
    L, R = [], []
    while size > 1:
        half = size // 2
        a1, a2 = a[:half], a[half:]
        b1, b2 = b[:half], b[half:]
        y_half = y_pow[half]
        y_half_inv = pow(y_half, -1, Q)
        c_l = sum(a1[i] * y_pow[i + 1] % Q * b2[i] for i in range(half)) % Q
        c_r = sum(a2[i] * y_pow[half + i + 1] % Q * b1[i] for i in range(half)) % Q
        d_l, d_r = rand(), rand()
        l_sc, l_pt, r_sc, r_pt = [c_l, d_l], [gens.g, gens.h], [c_r, d_r], [gens.g, gens.h]
        for k in range(n):
            p = k % size
            if p >= half:
                l_sc.append(a1[p - half] * y_half_inv % Q * cg[k] % Q)
                l_pt.append(gs[k])
                r_sc.append(b1[p - half] * chh[k] % Q)
                r_pt.append(hs[k])
            else:
                l_sc.append(b2[p] * chh[k] % Q)
                l_pt.append(hs[k])
                r_sc.append(a2[p] * y_half % Q * cg[k] % Q)
                r_pt.append(gs[k])
        Lp = jubjub.msm(l_sc, l_pt)
        Rp = jubjub.msm(r_sc, r_pt)
        L.append(Lp)
        R.append(Rp)
        tr.append_point(b"L", Lp)
        tr.append_point(b"R", Rp)
        e = tr.challenge_scalar(b"e", Q)
        e_inv = pow(e, -1, Q)
        for k in range(n):
            if k % size < half:
                cg[k] = cg[k] * e_inv % Q
                chh[k] = chh[k] * e % Q
            else:
                cg[k] = cg[k] * e % Q * y_half_inv % Q
                chh[k] = chh[k] * e_inv % Q
        a = [(a1[i] * e + a2[i] * y_half % Q * e_inv) % Q for i in range(half)]
        b = [(b1[i] * e_inv + b2[i] * e) % Q for i in range(half)]
        e2 = e * e % Q
        alpha = (d_l * e2 + alpha + d_r * pow(e_inv, 2, Q)) % Q
        size = half

    r, s, dd, eta = rand(), rand(), rand(), rand()
    a0, b0 = a[0], b[0]
    A1 = jubjub.msm(
        [r * c % Q for c in cg] + [s * c % Q for c in chh]
        + [(r * y % Q * b0 + s * y % Q * a0) % Q, dd],
        list(gs) + list(hs) + [gens.g, gens.h],
    )
    B = jubjub.msm([r * y % Q * s % Q, eta], [gens.g, gens.h])
    tr.append_point(b"A1", A1)
    tr.append_point(b"B", B)
    e = tr.challenge_scalar(b"e", Q)
    r1 = (r + a0 * e) % Q
    s1 = (s + b0 * e) % Q
    d1 = (eta + dd * e + alpha * e % Q * e) % Q
    return Proof(A, A1, B, r1, s1, d1, tuple(L), tuple(R))


def verify(gens: Generators, commitments: Sequence[jubjub.Point], proof: Proof, n_bits: int) -> bool:
    m = len(commitments)
    n = n_bits * m
    if not (_is_pow2(n_bits) and _is_pow2(m)) or len(gens.gs) < n:
        return False
    rounds = n.bit_length() - 1
    if len(proof.L) != rounds or len(proof.R) != rounds:
        return False
    tr = _start(gens, commitments, n_bits)
    tr.append_point(b"A", proof.A)
    y = tr.challenge_scalar(b"y", Q)
    z = tr.challenge_scalar(b"z", Q)
    es = []
    for lp, rp in zip(proof.L, proof.R):
        tr.append_point(b"L", lp)
        tr.append_point(b"R", rp)
        es.append(tr.challenge_scalar(b"e", Q))
    tr.append_point(b"A1", proof.A1)
    tr.append_point(b"B", proof.B)
    e = tr.challenge_scalar(b"e", Q)
    e2 = e * e % Q
    es_inv = [pow(x, -1, Q) for x in es]

    # s[i] = prod over rounds of e_j^{-1} (low half) or e_j (high half)
    s = [1] * n
    s[0] = 1
    for x in es_inv:
        s[0] = s[0] * x % Q
    for i in range(1, n):
        lg = i.bit_length() - 1
        k = 1 << lg
        s[i] = s[i - k] * pow(es[rounds - 1 - lg], 2, Q) % Q

    y_inv = pow(y, -1, Q)
    y_n = pow(y, n, Q)
    y_n1 = y_n * y % Q
    y_sum = sum(pow(y, i, Q) for i in range(1, n + 1)) % Q
    d = _d_vector(z, n_bits, m)
    d_sum = sum(d) % Q
    z2 = z * z % Q

    scalars, points = [], []
    y_inv_i = 1
    y_ni = y_n
    for i in range(n):
        scalars.append((proof.r1 * e % Q * y_inv_i % Q * s[i] + e2 * z) % Q)
        points.append(gens.gs[i])
        scalars.append((proof.s1 * e % Q * s[n - 1 - i] - e2 * (d[i] * y_ni + z)) % Q)
        points.append(gens.hs[i])
        y_inv_i = y_inv_i * y_inv % Q
        y_ni = y_ni * y_inv % Q
    zp = 1
    for c in commitments:
        zp = zp * z2 % Q
        scalars.append(-e2 * zp % Q * y_n1 % Q)
        points.append(c)
    scalars.append((proof.r1 * y % Q * proof.s1 + e2 * (y_n1 * z % Q * d_sum + (z2 - z) * y_sum)) % Q)
    points.append(gens.g)
    scalars.append(proof.d1)
    points.append(gens.h)
    scalars += [(-e) % Q, Q - 1, (-e2) % Q]
    points += [proof.A1, proof.B, proof.A]
    for j in range(rounds):
        scalars.append(-e2 * es[j] % Q * es[j] % Q)
        points.append(proof.L[j])
        scalars.append(-e2 * es_inv[j] % Q * es_inv[j] % Q)
        points.append(proof.R[j])
    return jubjub.msm(scalars, points) == jubjub.IDENTITY
