"""Portable random streams.

Every generator in the package draws from ``Stream``, a thin wrapper around
the Philox4x64-10 counter-based bit generator.  The seeding rule is fixed so
that datasets written by one version can be regenerated exactly:

* key = (seed mod 2**64, stream id), counter starts at zero;
* a uniform double is ``(raw >> 11) * 2**-53`` for each 64-bit raw output;
* Bernoulli(p) is ``u < p``; an integer in ``[lo, hi]`` is
  ``lo + floor(u * (hi - lo + 1))``;
* standard normals use Box-Muller on consecutive uniform pairs
  ``z = sqrt(-2 log(1 - u1)) * cos(2 pi u2)``.

Only raw 64-bit outputs are taken from numpy, whose Philox output is fixed
by the published algorithm; all transformations above are done here.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_SCALE = 2.0**-53


class Stream:
    """A seeded stream of uniform, Bernoulli, integer and normal variates."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def uniform(self, size=None) -> np.ndarray | float:
        n = 1 if size is None else int(np.prod(size))
        raw = np.asarray(self._bits.random_raw(n), dtype=np.uint64)
        u = (raw >> np.uint64(11)).astype(np.float64) * _SCALE
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def bernoulli(self, p, size) -> np.ndarray:
        return (self.uniform(size) < p).astype(np.uint8)

    def integers(self, lo: int, hi: int, size=None):
        """Integers in the closed range ``[lo, hi]``."""
        u = np.asarray(self.uniform(size))
        values = lo + np.floor(u * (hi - lo + 1)).astype(np.int64)
        return int(values) if size is None else values

    def normal(self, size) -> np.ndarray:
        n = int(np.prod(size))
        u = self.uniform(2 * n)
        u1, u2 = u[0::2], u[1::2]
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
        return z.reshape(size)
