"""
Seeded, platform-independent random numbers

All randomness in dartprune (random pivots, random retention, Monte-Carlo
subsets, synthetic tokens) flows through this module so that a 64-bit seed
reproduces the same stream bit-for-bit on every platform and in every
language that implements the same three pieces:

- splitmix64 expands the user seed into generator state
- xoshiro256** produces the 64-bit stream
- Box-Muller turns uniform pairs into Gaussians

The exact algorithms are spelled out in docs/PRNG.md.
"""
from __future__ import annotations

import math
from typing import List, Optional

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_TWO_POW_MINUS_53 = 1.0 / (1 << 53)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    """Sebastiano Vigna's splitmix64; used for seeding and seed derivation"""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed for the index-th sub-stream: first splitmix64 output of seed + index"""
    return SplitMix64((seed + index) & MASK64).next_u64()


class Xoshiro256StarStar:
    """xoshiro256** generator seeded with four splitmix64 outputs"""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        mixer = SplitMix64(self.seed)
        self.state = [mixer.next_u64() for _ in range(4)]
        self._spare_gauss: Optional[float] = None

    def next_u64(self) -> int:
        s = self.state
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64

        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)

        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits"""
        return (self.next_u64() >> 11) * _TWO_POW_MINUS_53

    def _random_open_low(self) -> float:
        # (0, 1]: keeps log() finite in Box-Muller
        return ((self.next_u64() >> 11) + 1) * _TWO_POW_MINUS_53

    def randbelow(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection of the short tail"""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound

    def gauss(self) -> float:
        """
        Standard normal via Box-Muller

        Each uniform pair yields two normals; the sine branch is cached and
        returned by the next call.
        """
        if self._spare_gauss is not None:
            value, self._spare_gauss = self._spare_gauss, None
            return value

        u1 = self._random_open_low()
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare_gauss = radius * math.sin(angle)
        return radius * math.cos(angle)

    def gauss_matrix(self, rows: int, cols: int) -> np.ndarray:
        """Row-major matrix of standard normals, drawn in stream order"""
        values = [self.gauss() for _ in range(rows * cols)]
        return np.asarray(values, dtype=np.float64).reshape(rows, cols)

    def sample(self, population: int, k: int) -> List[int]:
        """
        k distinct integers from range(population), partial Fisher-Yates

        Returned in draw order; callers sort when they need sets.
        """
        if not 0 <= k <= population:
            raise ValueError(f"cannot draw {k} from {population}")
        pool = list(range(population))
        for i in range(k):
            j = i + self.randbelow(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def fork(self, index: int) -> "Xoshiro256StarStar":
        """Independent child generator for the index-th sub-task"""
        return Xoshiro256StarStar(derive_seed(self.seed, index))
