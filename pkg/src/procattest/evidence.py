"""Evidence layer: sequential work chains, Merkle commitments, checkpoints.

A checkpoint's chain starts from ``s_0 = Argon2id(seed)`` and iterates
``s_j = SHA256(s_{j-1})`` for ``j = 1..N``.  All ``N + 1`` states become
leaves of a binary Poseidon tree (leaf ``j`` holds ``s_j``), so that every
link ``s_{j-1} -> s_j`` can be opened.  Unused leaves are zero.

Checkpoint record layout (all integers little-endian)::

    u32  body length
    4s   magic b"PACP"
    u8   version (1)
    u8   flags (bit 0: private section present)
    u32  index i
    32s  h_{i-1}
    32s  h_i
    32s  R_i (field element, little-endian)
    u32  claimed duration d_i, seconds
    32s  delta_i
    32s  serialized aggregate commitment
    -- private section, only when flag bit 0 is set --
    u64  timestamp tau_i, milliseconds
    u16  m
    m x u32  features f_j
    m x 32s  randomness r_j

``h_i = SHA256(h_{i-1} || delta_i || commitment)`` over the raw 32-byte fields.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

from argon2.low_level import Type, hash_secret_raw

from . import commitments as cm
from . import jubjub, poseidon
from .field import P, digest_to_limbs

GENESIS_TAG = b"ZKPOP-GENESIS"
RECORD_MAGIC = b"PACP"
RECORD_VERSION = 1
DIGEST_BYTES = 32
MIB = 1024 * 1024


class EvidenceError(ValueError):
    pass


@dataclass(frozen=True)
class SWFParams:
    memory_cost: int = 64 * MIB  # bytes
    time_cost: int = 3
    parallelism: int = 1
    chain_length: int = 4096
    salt: bytes = b"procattest-swf01"

    def validate(self) -> None:
        if self.memory_cost < 8 * MIB:
            raise EvidenceError("memory_cost must be at least 8 MiB")
        if self.memory_cost % 1024:
            raise EvidenceError("memory_cost must be a whole number of KiB")
        if self.time_cost < 1:
            raise EvidenceError("time_cost must be positive")
        if self.parallelism != 1:
            raise EvidenceError("parallelism must be 1 to keep the chain sequential")
        if self.chain_length < 2:
            raise EvidenceError("chain_length must be at least 2")
        if len(self.salt) != 16:
            raise EvidenceError("salt must be 16 bytes")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def leaf_value(digest: bytes) -> int:
    """Field encoding of a 32-byte state: Poseidon of its two 128-bit limbs."""
    lo, hi = digest_to_limbs(digest)
    return poseidon.hash2(lo, hi)


class MerkleTree:
    """Binary Poseidon tree padded with zero leaves to a power of two."""

    def __init__(self, leaves: Sequence[int]):
        if not leaves:
            raise EvidenceError("cannot commit to an empty chain")
        self.size = len(leaves)
        self.depth = max(1, (self.size - 1).bit_length())
        zeros = [0]
        for _ in range(self.depth):
            zeros.append(poseidon.hash2(zeros[-1], zeros[-1]))
        self.zeros = zeros
        levels = [list(leaves)]
        for lvl in range(self.depth):
            cur = levels[-1]
            if len(cur) % 2:
                cur = cur + [zeros[lvl]]
            levels.append([poseidon.hash2(cur[i], cur[i + 1]) for i in range(0, len(cur), 2)])
        self.levels = levels

    @property
    def root(self) -> int:
        return self.levels[-1][0]

    def leaf(self, pos: int) -> int:
        return self.levels[0][pos]

    def path(self, pos: int) -> list[int]:
        if not 0 <= pos < self.size:
            raise EvidenceError(f"leaf position {pos} out of range")
        sibs = []
        for lvl in range(self.depth):
            sib = pos ^ 1
            row = self.levels[lvl]
            sibs.append(row[sib] if sib < len(row) else self.zeros[lvl])
            pos >>= 1
        return sibs


def tree_depth(chain_length: int) -> int:
    return max(1, chain_length.bit_length())  # ceil(log2(N + 1))


def root_from_path(leaf: int, pos: int, siblings: Sequence[int]) -> int:
    cur = leaf
    for sib in siblings:
        cur = poseidon.hash2(sib, cur) if pos & 1 else poseidon.hash2(cur, sib)
        pos >>= 1
    return cur


def verify_path(root: int, leaf: int, pos: int, siblings: Sequence[int]) -> bool:
    if pos < 0 or pos >> len(siblings):
        return False
    return root_from_path(leaf, pos, siblings) == root


@dataclass
class SWFChain:
    seed_state: bytes
    states: list[bytes] = field(default_factory=list)
    merkle_root: int | None = None
    tree: MerkleTree | None = field(default=None, repr=False, compare=False)

    @property
    def length(self) -> int:
        return len(self.states)

    def state(self, j: int) -> bytes:
        return self.seed_state if j == 0 else self.states[j - 1]

    def all_states(self) -> list[bytes]:
        return [self.seed_state] + self.states


def swf_init(session_seed: bytes, params: SWFParams) -> SWFChain:
    params.validate()
    s0 = hash_secret_raw(
        secret=session_seed,
        salt=params.salt,
        time_cost=params.time_cost,
        memory_cost=params.memory_cost // 1024,
        parallelism=params.parallelism,
        hash_len=DIGEST_BYTES,
        type=Type.ID,
    )
    return SWFChain(s0)


def swf_extend(chain: SWFChain, steps: int) -> SWFChain:
    if steps < 1:
        raise EvidenceError("steps must be at least 1")
    states = list(chain.states)
    cur = chain.state(len(states))
    for _ in range(steps):
        cur = sha256(cur)
        states.append(cur)
    return SWFChain(chain.seed_state, states)


def merkle_commit(chain: SWFChain) -> MerkleTree:
    """Poseidon tree over ``s_0..s_N``; leaf ``j`` authenticates ``s_j``."""
    if chain.length < 1:
        raise EvidenceError("chain must contain at least two states")
    return MerkleTree([leaf_value(s) for s in chain.all_states()])


def finalize(chain: SWFChain) -> SWFChain:
    tree = merkle_commit(chain)
    return replace(chain, merkle_root=tree.root, tree=tree)


def generate_swf(session_seed: bytes, params: SWFParams, index: int = 0) -> SWFChain:
    """Full chain for checkpoint ``index`` (seed is domain-separated by index)."""
    chain = swf_init(session_seed + struct.pack("<I", index), params)
    return finalize(swf_extend(chain, params.chain_length))


@dataclass(frozen=True)
class SamplePlan:
    k: int
    indices: tuple[int, ...]


def sample_index(root: int, ell: int, n: int) -> int:
    return poseidon.hash2(root % P, ell) % n + 1


def sample_positions(root: int, k: int, n: int) -> SamplePlan:
    """Positions ``j_l = Poseidon(R_i, l) mod N + 1`` for ``l = 1..k``."""
    if k < 1 or n < 1 or k > n:
        raise EvidenceError("need 1 <= k <= N")
    return SamplePlan(k, tuple(sample_index(root, ell, n) for ell in range(1, k + 1)))


# -- checkpoints --------------------------------------------------------------------

def genesis_hash(session_nonce: bytes) -> bytes:
    if len(session_nonce) != 32:
        raise EvidenceError("session nonce must be 32 bytes")
    return sha256(GENESIS_TAG + session_nonce)


def checkpoint_hash(prev_hash: bytes, delta: bytes, commitment: bytes) -> bytes:
    for name, val in (("prev_hash", prev_hash), ("delta", delta), ("commitment", commitment)):
        if len(val) != 32:
            raise EvidenceError(f"{name} must be 32 bytes")
    return sha256(prev_hash + delta + commitment)


@dataclass
class Checkpoint:
    index: int
    hash: bytes
    prev_hash: bytes
    swf_root: int
    duration: int
    delta: bytes
    commitment: bytes
    timestamp: int | None = None
    features: list[int] | None = None
    randomness: list[int] | None = None
    swf: SWFChain | None = field(default=None, repr=False, compare=False)

    def feature_commitments(self) -> list[cm.FeatureCommitment]:
        return [cm.commit(f, r) for f, r in zip(self.features, self.randomness)]

    def public(self) -> "Checkpoint":
        return Checkpoint(self.index, self.hash, self.prev_hash, self.swf_root,
                          self.duration, self.delta, self.commitment)

    def to_bytes(self, include_private: bool = False) -> bytes:
        private = include_private and self.features is not None
        body = struct.pack("<4sBBI", RECORD_MAGIC, RECORD_VERSION, int(private), self.index)
        body += self.prev_hash + self.hash + self.swf_root.to_bytes(32, "little")
        body += struct.pack("<I", self.duration) + self.delta + self.commitment
        if private:
            body += struct.pack("<QH", self.timestamp, len(self.features))
            body += b"".join(struct.pack("<I", f) for f in self.features)
            body += b"".join(r.to_bytes(32, "little") for r in self.randomness)
        return struct.pack("<I", len(body)) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["Checkpoint", int]:
        """Parse one record; returns the checkpoint and bytes consumed."""
        try:
            (length,) = struct.unpack_from("<I", data, 0)
            body = data[4:4 + length]
            if len(body) != length:
                raise EvidenceError("truncated checkpoint record")
            magic, version, flags, index = struct.unpack_from("<4sBBI", body, 0)
            if magic != RECORD_MAGIC or version != RECORD_VERSION:
                raise EvidenceError("not a checkpoint record")
            off = 10
            prev_hash, h, root_b = body[off:off + 32], body[off + 32:off + 64], body[off + 64:off + 96]
            off += 96
            (duration,) = struct.unpack_from("<I", body, off)
            off += 4
            delta, commitment = body[off:off + 32], body[off + 32:off + 64]
            off += 64
            cp = cls(index, h, prev_hash, int.from_bytes(root_b, "little"), duration, delta, commitment)
            if flags & 1:
                cp.timestamp, m = struct.unpack_from("<QH", body, off)
                off += 10
                cp.features = list(struct.unpack_from(f"<{m}I", body, off))
                off += 4 * m
                cp.randomness = [int.from_bytes(body[off + 32 * i:off + 32 * (i + 1)], "little") for i in range(m)]
                off += 32 * m
            if off != length or cp.swf_root >= P:
                raise EvidenceError("malformed checkpoint record")
        except struct.error as exc:
            raise EvidenceError("truncated checkpoint record") from exc
        return cp, 4 + length


def build_checkpoint(
    prev: bytes,
    delta: bytes,
    features: Sequence[int],
    randomness: Sequence[int],
    swf: SWFChain,
    timestamp: int,
    duration: int,
    index: int = 1,
    m: int | None = None,
) -> Checkpoint:
    """Assemble checkpoint ``index`` and its hash from private material."""
    if m is not None and len(features) != m:
        raise EvidenceError(f"expected {m} features, got {len(features)}")
    if len(features) != len(randomness):
        raise EvidenceError("features and randomness differ in length")
    if swf.merkle_root is None:
        raise EvidenceError("chain must be finalized before checkpointing")
    pts = [cm.commit(f, r).point for f, r in zip(features, randomness)]
    commitment = jubjub.compress(cm.aggregate(pts))
    h = checkpoint_hash(prev, delta, commitment)
    return Checkpoint(
        index, h, prev, swf.merkle_root, int(duration), delta, commitment,
        int(timestamp), [int(f) for f in features], [int(r) % jubjub.ORDER for r in randomness], swf,
    )


def verify_linkage(checkpoints: Sequence[Checkpoint], genesis: bytes) -> int | None:
    """Index of the first checkpoint whose hash linkage breaks, or None."""
    prev = genesis
    for cp in checkpoints:
        if cp.prev_hash != prev or checkpoint_hash(cp.prev_hash, cp.delta, cp.commitment) != cp.hash:
            return cp.index
        prev = cp.hash
    return None
