"""Problem definition and margin arithmetic shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import MarginMismatch


@dataclass(frozen=True)
class Instance:
    """Row and column sums of a 0-1 table.

    ``rows`` and ``cols`` are stored as tuples of nonnegative ints.  The
    constructor does not check that the totals agree; use :func:`normalize`
    for raw input.
    """

    rows: tuple
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))
        if any(r < 0 for r in self.rows) or any(c < 0 for c in self.cols):
            raise ValueError("margins must be nonnegative")

    @property
    def d(self) -> int:
        return sum(self.cols)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.cols)

    def transpose(self) -> "Instance":
        return Instance(self.cols, self.rows)

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "cols": list(self.cols),
                "d": self.d, "m": self.m, "n": self.n}


@dataclass(frozen=True)
class SequenceDiagnostics:
    ratio_path: tuple
    fourth_moment_score: float


def normalize(instance: Instance) -> Instance:
    """Strip zero margins and sort the columns nonincreasing.

    Row order is kept.  Raises :class:`MarginMismatch` if the totals differ.
    """
    if sum(instance.rows) != sum(instance.cols):
        raise MarginMismatch(
            f"row total {sum(instance.rows)} != column total {sum(instance.cols)}")
    rows = tuple(r for r in instance.rows if r > 0)
    cols = tuple(sorted((c for c in instance.cols if c > 0), reverse=True))
    return Instance(rows, cols)


def falling_factorial(s: int, k: int) -> int:
    """Return ``s (s-1) ... (s-k+1)``; the empty product for ``k = 0``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = 1
    for i in range(k):
        out *= s - i
        if out == 0:
            break
    return out


def vector_falling_sum(s: Sequence[int], k: int) -> int:
    """Sum of ``falling_factorial(s_j, k)`` over the entries of ``s``."""
    if k == 0:
        return 1
    return sum(falling_factorial(x, k) for x in s)


def power_sum(s: Sequence[int], k: int) -> int:
    return sum(x ** k for x in s)


def gale_ryser_feasible(instance: Instance) -> bool:
    """True iff some 0-1 matrix has these margins."""
    rows, cols = instance.rows, instance.cols
    if sum(rows) != sum(cols):
        return False
    cols = sorted(cols, reverse=True)
    if cols and cols[0] > len(rows):
        return False
    lhs = 0
    for k, c in enumerate(cols, start=1):
        lhs += c
        if lhs > sum(min(r, k) for r in rows):
            return False
    return True


def sequence_diagnostics(cols: Sequence[int]) -> SequenceDiagnostics:
    """Suffix ratio path and the fourth-moment score of a column vector.

    ``ratio_path[k]`` is ``sum(c[k:]**2) / sum(c[k:])`` as an exact fraction.
    The score adds ``[c_k]_4 / sum(c[k:])**2`` over all positions.
    """
    ratios = []
    terms = []
    tail1 = sum(cols)
    tail2 = sum(c * c for c in cols)
    for c in cols:
        if tail1 <= 0:
            break
        ratios.append(Fraction(tail2, tail1))
        if c >= 4:
            terms.append(falling_factorial(c, 4) / (tail1 * tail1))
        tail1 -= c
        tail2 -= c * c
    return SequenceDiagnostics(tuple(ratios), math.fsum(terms))
