"""splitmix64 streams keyed by (seed, input, trial).

Every trial owns an independent stream, so results do not depend on
the order in which trials run or on how they are split across threads.
The same arithmetic is reproduced in the compiled kernel.
"""
from __future__ import annotations

RNG_NAME = "splitmix64-keyed-v1"

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, input_idx: int) -> int:
    return mix64((mix64(seed + GOLDEN) ^ input_idx) + GOLDEN)


def trial_state(key: int, trial: int) -> int:
    return mix64((key ^ trial) + GOLDEN)


class SplitMix64:
    """The generator handed to :func:`run_once`."""

    __slots__ = ("state",)

    def __init__(self, state: int = 0):
        self.state = state & MASK

    @classmethod
    def for_trial(cls, seed: int, input_idx: int = 0, trial: int = 0) -> "SplitMix64":
        return cls(trial_state(stream_key(seed, input_idx), trial))

    def next64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def below(self, d: int) -> int:
        """Uniform integer in ``[0, d)`` without modulo bias."""
        if not 0 < d <= MASK:
            raise ValueError("bound must be in [1, 2**64)")
        threshold = ((1 << 64) - d) % d
        while True:
            r = self.next64()
            if r >= threshold:
                return r % d

    def choose(self, cum: list[int]) -> int:
        """Index drawn with probability ``(cum[j] - cum[j-1]) / cum[-1]``."""
        v = self.below(cum[-1])
        for j, c in enumerate(cum):
            if v < c:
                return j
        raise AssertionError("unreachable")
