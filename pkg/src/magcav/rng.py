"""Portable counter-based random streams.

Bit-exact definition (all arithmetic modulo 2**64, see docs/rng.md)::

    mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
               return z ^ (z >> 31)

    key(seed, stream) = mix64(mix64(seed) + GOLDEN * (stream + 1))
    word(key, k)      = mix64(key + GOLDEN * (k + 1))          k = 0, 1, ...
    uniform(key, k)   = (word(key, k) >> 11) * 2**-53           in [0, 1)

Normals come in Box-Muller pairs from uniforms (u1, u2) = (u[2j], u[2j+1]):
r = sqrt(-2 * log1p(-u1)), z[2j] = r cos(2 pi u2), z[2j+1] = r sin(2 pi u2).

Because every word is a pure function of (seed, stream, k), any stream can
be generated in any order or in parallel with identical results.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64_int(z: int) -> int:
    """Scalar reference version of the mixer on Python ints."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream: int = 0) -> int:
    return mix64_int(mix64_int(seed) + GOLDEN * (stream + 1))


def words(key: int, n: int, start: int = 0) -> np.ndarray:
    counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + np.uint64(GOLDEN) * counters
        return _mix64(z)


def uniforms(key: int, n: int, start: int = 0) -> np.ndarray:
    return (words(key, n, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


class NormalStream:
    """Standard-normal deviates from one (seed, stream) pair.

    >>> a = NormalStream(42).normal(4)
    >>> b = NormalStream(42)
    >>> bool((np.concatenate([b.normal(2), b.normal(2)]) == a).all())
    True
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.key = stream_key(self.seed, self.stream)
        self._pairs_used = 0
        self._spare = None

    def normal(self, n: int) -> np.ndarray:
        out = np.empty(n)
        filled = 0
        if self._spare is not None and n > 0:
            out[0] = self._spare
            self._spare = None
            filled = 1
        need = n - filled
        pairs = (need + 1) // 2
        if pairs:
            u = uniforms(self.key, 2 * pairs, start=2 * self._pairs_used)
            self._pairs_used += pairs
            r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
            theta = 2.0 * np.pi * u[1::2]
            z = np.empty(2 * pairs)
            z[0::2] = r * np.cos(theta)
            z[1::2] = r * np.sin(theta)
            out[filled:] = z[:need]
            if 2 * pairs > need:
                self._spare = z[-1]
        return out
