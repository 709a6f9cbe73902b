"""Counter-based uniform streams (Philox4x64-10).

Replication ``i`` of a run seeded with ``seed`` draws from the stream keyed by
``(seed mod 2**64, i mod 2**64)``; block ``b`` of that stream encrypts the
counter ``(b + 1, 0, 0, 0)``.  The resulting 64-bit words coincide with
``numpy.random.Philox`` keyed by the uint64 pair ``(seed, i)`` and doubles are built as
``(word >> 11) * 2**-53``, matching ``Generator.random``.  The compiled kernel
implements the same stream.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_INV53 = 1.0 / 9007199254740992.0


def philox4x64_10(ctr, key):
    x0, x1, x2, x3 = ctr
    k0, k1 = key
    for r in range(10):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * x0
        p1 = _M1 * x2
        x0, x1, x2, x3 = (p1 >> 64) ^ x1 ^ k0, p1 & _MASK, (p0 >> 64) ^ x3 ^ k1, p0 & _MASK
    return x0, x1, x2, x3


class PhiloxStream:
    """Uniform ``[0, 1)`` stream for one ``(seed, index)`` pair."""

    __slots__ = ("key", "block", "_buf", "_pos")

    def __init__(self, seed: int, index: int = 0):
        self.key = (int(seed) & _MASK, int(index) & _MASK)
        self.block = 0
        self._buf = ()
        self._pos = 4

    def next_uint64(self) -> int:
        if self._pos == 4:
            self.block += 1
            self._buf = philox4x64_10((self.block & _MASK, 0, 0, 0), self.key)
            self._pos = 0
        out = self._buf[self._pos]
        self._pos += 1
        return out

    def random(self) -> float:
        return (self.next_uint64() >> 11) * _INV53
