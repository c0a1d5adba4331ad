"""Key extension: pre-shared key -> check-state string and CNOT transform string.

The extension is a bit-exact, non-cryptographic construction. Each sub-key seed
is the 64-bit FNV-1a hash of the key bytes followed by one domain-tag byte, and
each sub-key is the SplitMix64 stream started from that seed. One 64-bit output
is consumed per derived symbol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from qsac.config import DEFAULT_MAX_QUBITS

MASK64 = (1 << 64) - 1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

TAG_Q = 0x51  # 'Q'
TAG_T = 0x54  # 'T'

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def splitmix64(seed: int) -> Iterator[int]:
    """Infinite SplitMix64 output stream starting from ``seed``."""
    state = seed & MASK64
    while True:
        state = (state + _GOLDEN_GAMMA) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)


@dataclass(frozen=True)
class Key:
    """Pre-shared key: ``bits`` holds ceil(bit_length / 8) bytes."""

    bits: bytes
    bit_length: int = -1

    def __post_init__(self):
        if not isinstance(self.bits, (bytes, bytearray)) or not self.bits:
            raise ValueError("key must be a non-empty byte string")
        object.__setattr__(self, "bits", bytes(self.bits))
        if self.bit_length == -1:
            object.__setattr__(self, "bit_length", 8 * len(self.bits))
        if self.bit_length < 8:
            raise ValueError(f"key must have at least 8 bits, got {self.bit_length}")
        if (self.bit_length + 7) // 8 != len(self.bits):
            raise ValueError(f"{len(self.bits)} bytes cannot hold exactly {self.bit_length} key bits")

    @classmethod
    def from_hex(cls, text: str) -> Key:
        """Parse a hex string; an optional ``0x`` prefix and any whitespace are ignored."""
        s = re.sub(r"\s+", "", text)
        if s[:2].lower() == "0x":
            s = s[2:]
        if not s:
            raise ValueError("empty key")
        if len(s) % 2:
            raise ValueError("hex key must have an even number of digits")
        try:
            data = bytes.fromhex(s)
        except ValueError as exc:
            raise ValueError(f"invalid hex key: {exc}") from None
        return cls(data)

    @classmethod
    def from_file(cls, path: str | Path) -> Key:
        return cls.from_hex(Path(path).read_text())

    def hex(self) -> str:
        return self.bits.hex()


@dataclass(frozen=True)
class SubKeys:
    kq_seed: int
    kt_seed: int


def derive_subkeys(key: Key) -> SubKeys:
    if not key.bits:
        raise ValueError("empty key")
    return SubKeys(fnv1a64(key.bits + bytes([TAG_Q])), fnv1a64(key.bits + bytes([TAG_T])))


def _take(seed: int, count: int) -> list[int]:
    stream = splitmix64(seed)
    return [next(stream) for _ in range(count)]


def derive_check_string(sub: SubKeys, n: int) -> list[int]:
    """Length-``n`` quaternary string: symbol i is the i-th K_Q output mod 4."""
    if n < 1:
        raise ValueError(f"check-qubit count must be >= 1, got {n}")
    return [z % 4 for z in _take(sub.kq_seed, n)]


def derive_transform_string(sub: SubKeys, n: int, m: int, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> list[int]:
    """Length-``n+m`` string of CNOT targets, each in 1..n+m.

    Element i (1-based) is the target of the CNOT controlled by qubit i.
    Targets are independent draws; repeats and self-targets are allowed.
    """
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    return transform_targets(sub, n + m, max_qubits=max_qubits)


def transform_targets(sub: SubKeys, size: int, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> list[int]:
    """Transform string for a register of ``size`` qubits (no n/m split)."""
    if size < 1:
        raise ValueError(f"register size must be >= 1, got {size}")
    if size > max_qubits:
        raise ValueError(f"n+m = {size} exceeds the cap of {max_qubits}")
    return [z % size + 1 for z in _take(sub.kt_seed, size)]
