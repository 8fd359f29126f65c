"""SplitMix64, the one generator family used by every benchmark."""

from __future__ import annotations

from .core import M64, mix64

GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & M64

    @classmethod
    def for_thread(cls, seed: int, index: int) -> SplitMix64:
        """Independent stream for worker ``index`` of a run seeded with ``seed``."""
        return cls(mix64(seed ^ mix64((index + 1) * GOLDEN_GAMMA)))

    def next(self) -> int:
        z = self.state = (self.state + GOLDEN_GAMMA) & M64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return (self.next() * n) >> 64

    def advance(self, steps: int) -> int:
        """Draw ``steps`` values and return their xor, so the work is not dead."""
        acc = 0
        for _ in range(steps):
            acc ^= self.next()
        return acc
