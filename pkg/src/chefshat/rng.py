"""Seedable, portable randomness for shuffles, agents, and seed derivation.

Every random draw in the engine goes through SplitMix64: a 64-bit generator
whose whole state is one unsigned integer, so it serializes into event logs
and replays bit-exactly on any platform. The stream for state s is

    s' = (s + 0x9E3779B97F4A7C15) mod 2^64
    output = mix64(s')

with mix64 the SplitMix64 finalizer (xor-shift / multiply avalanche).

Independent streams (per-match seeds, per-seat agent seeds) come from
``derive_seed(seed, index)`` = mix64(seed + (index + 1) * GOLDEN). The
simulator uses index = match number for match seeds and index = 16 + seat
for agent seeds; nothing else uses indices 16..19.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed: mix64(seed + (index + 1) * GOLDEN)."""
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


class SplitMix64:
    """SplitMix64 generator; ``state`` is the full serializable state."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        limit = MASK64 + 1 - ((MASK64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def coin(self) -> bool:
        return bool(self.next_u64() & 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, high index down, j = randbelow(i + 1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order of selection."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
