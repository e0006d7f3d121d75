"""Portable seeded PRNG: xoshiro256** seeded through splitmix64.

Every random draw in a simulation run goes through one of these generators so
that two runs with the same seed produce byte-identical ledgers.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    def __init__(self, seed: int = 0, state: tuple[int, int, int, int] | None = None):
        if state is not None:
            if len(state) != 4 or not any(state):
                raise ValueError("xoshiro256** state must be four words, not all zero")
            self.s = [w & MASK64 for w in state]
            return
        sm = seed & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self.s = words

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def getrandbits(self, k: int) -> int:
        """Uniform integer with ``k`` bits, built from whole 64-bit words (high word first)."""
        if k <= 0:
            return 0
        words = (k + 63) // 64
        acc = 0
        for _ in range(words):
            acc = (acc << 64) | self.next_u64()
        return acc >> (words * 64 - k)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        k = n.bit_length()
        while True:
            r = self.getrandbits(k)
            if r < n:
                return r

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` inclusive."""
        return lo + self.randbelow(hi - lo + 1)

    def random(self) -> float:
        """Uniform float in ``[0, 1)`` with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def fork(self) -> "Xoshiro256StarStar":
        """Independent child generator seeded from this one's next output."""
        return Xoshiro256StarStar(self.next_u64())
