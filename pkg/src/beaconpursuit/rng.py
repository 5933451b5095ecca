"""Portable seeded generator for randomized initial conditions.

xoshiro256** (Blackman & Vigna) seeded by four successive splitmix64 outputs
of the user seed. Doubles are ``(next() >> 11) * 2**-53``. The exact stream is
part of the reproducibility contract, so it is implemented here rather than
borrowed from numpy (whose bit generators differ).
"""
from __future__ import annotations

import math

_MASK = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(state: int):
    """Return ``(output, new_state)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


class Xoshiro256:
    def __init__(self, seed: int = 0):
        sm = int(seed) & _MASK
        s = []
        for _ in range(4):
            out, sm = splitmix64(sm)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in ``[0, 1)``."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def uniform_vector(self, lo: float, hi: float) -> list[float]:
        return [self.uniform(lo, hi) for _ in range(3)]

    def unit_vector(self) -> list[float]:
        """Uniform on the sphere: ``z ~ U[-1, 1)``, ``phi ~ U[0, 2 pi)``."""
        z = self.uniform(-1.0, 1.0)
        phi = self.uniform(0.0, 2.0 * math.pi)
        r = math.sqrt(max(0.0, 1.0 - z * z))
        return [r * math.cos(phi), r * math.sin(phi), z]
