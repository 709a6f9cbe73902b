"""Exact counts for validation.

:func:`brute_force_count` enumerates every 0-1 matrix.  :func:`dp_count`
sweeps the columns while tracking only how many rows have each residual sum
(rows with equal residuals are interchangeable), carrying exact integers.
The zero-variance transition kernel is built from those exact counts.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb

import numpy as np

from .core import Instance
from .errors import DeadState, StateSpaceExceeded, TooLarge
from .mckay import eta_log

MINUS_INFINITY = -math.inf
DEFAULT_STATE_BUDGET = 10 ** 7
BRUTE_FORCE_MAX_CELLS = 25
_CHUNK_BITS = 16


@lru_cache(maxsize=64)
def margin_tally(m: int, n: int) -> dict:
    """Map ``(rows, cols) -> count`` over all ``2**(m*n)`` m-by-n 0-1 matrices."""
    cells = m * n
    if cells > BRUTE_FORCE_MAX_CELLS:
        raise TooLarge(f"{m}x{n} has {cells} cells; brute force allows {BRUTE_FORCE_MAX_CELLS}")
    tally = {}
    if cells == 0:
        return {((0,) * m, (0,) * n): 1}
    total = 1 << cells
    step = 1 << min(cells, _CHUNK_BITS)
    # row i of a matrix is the n-bit pattern (code >> i*n) & mask; per-pattern
    # lookups give its row sum and its column indicator vector in radix m+1
    radix_r, radix_c = n + 1, m + 1
    mask = (1 << n) - 1
    patterns = np.arange(1 << n, dtype=np.int64)
    pat_bits = (patterns[:, None] >> np.arange(n, dtype=np.int64)) & 1
    pat_sum = pat_bits.sum(axis=1)
    pat_col = pat_bits @ (radix_c ** np.arange(n, dtype=np.int64))
    shift = radix_c ** n
    for lo in range(0, total, step):
        codes = np.arange(lo, min(lo + step, total), dtype=np.int64)
        rkey = np.zeros_like(codes)
        ckey = np.zeros_like(codes)
        for i in range(m):
            pat = (codes >> (i * n)) & mask
            rkey += pat_sum[pat] * radix_r ** i
            ckey += pat_col[pat]
        keys, counts = np.unique(rkey * shift + ckey, return_counts=True)
        for key, cnt in zip(keys.tolist(), counts.tolist()):
            tally[key] = tally.get(key, 0) + cnt
    out = {}
    for key, cnt in tally.items():
        rk, ck = divmod(key, shift)
        rows = tuple((rk // radix_r ** i) % radix_r for i in range(m))
        cols = tuple((ck // radix_c ** j) % radix_c for j in range(n))
        out[(rows, cols)] = cnt
    return out


def brute_force_count(instance: Instance) -> int:
    """Count by exhaustive enumeration; at most 25 cells."""
    m, n = instance.m, instance.n
    if m * n > BRUTE_FORCE_MAX_CELLS:
        raise TooLarge(f"{m}x{n} has {m * n} cells; brute force allows {BRUTE_FORCE_MAX_CELLS}")
    if any(r > n for r in instance.rows) or any(c > m for c in instance.cols):
        return 0
    return margin_tally(m, n).get((instance.rows, instance.cols), 0)


def _allocations(counts, c):
    """Ways to take ``c`` rows with positive residual: tuples ``k[1..T]``."""
    top = len(counts) - 1

    def rec(t, left):
        if t > top:
            if left == 0:
                yield ()
            return
        cap = min(counts[t], left)
        for k in range(cap + 1):
            for rest in rec(t + 1, left - k):
                yield (k,) + rest

    return rec(1, c)


def dp_count(instance: Instance, budget: int = DEFAULT_STATE_BUDGET) -> int:
    """Exact number of 0-1 tables with the given margins.

    Row order is irrelevant and zero margins are allowed.  Raises
    :class:`StateSpaceExceeded` when more than ``budget`` states are visited.
    """
    rows, cols = instance.rows, instance.cols
    if sum(rows) != sum(cols):
        return 0
    rmax = max(rows, default=0)
    start = [0] * (rmax + 1)
    for r in rows:
        start[r] += 1
    layer = {tuple(start): 1}
    visited = 1
    for c in cols:
        nxt = {}
        for counts, ways in layer.items():
            for ks in _allocations(counts, c):
                mult = ways
                new = list(counts)
                for t, k in enumerate(ks, start=1):
                    if k:
                        mult *= comb(counts[t], k)
                        new[t] -= k
                        new[t - 1] += k
                key = tuple(new)
                nxt[key] = nxt.get(key, 0) + mult
        layer = nxt
        visited += len(layer)
        if visited > budget:
            raise StateSpaceExceeded(f"visited {visited} states (budget {budget})")
        if not layer:
            return 0
    return sum(w for counts, w in layer.items() if counts[0] == len(rows))


def dp_count_log(instance: Instance, budget: int = DEFAULT_STATE_BUDGET) -> float:
    count = dp_count(instance, budget)
    return math.log(count) if count > 0 else MINUS_INFINITY


def exact_u_log(state, remaining_cols, m: int) -> float:
    """``ln mu(s, rho) - ln eta(rho, m)``: log chance a uniform column fill hits ``s``."""
    state = tuple(int(x) for x in state)
    remaining_cols = tuple(int(x) for x in remaining_cols)
    if any(x < 0 for x in state):
        return MINUS_INFINITY
    if not remaining_cols:
        return 0.0 if all(x == 0 for x in state) else MINUS_INFINITY
    count = dp_count(Instance(state, remaining_cols))
    if count == 0:
        return MINUS_INFINITY
    return math.log(count) - eta_log(remaining_cols, m)


def h_transform_kernel(state, remaining_cols, m: int | None = None, exact: bool = False) -> dict:
    """Zero-variance transitions from ``state`` when the next column is placed.

    Returns ``{successor_state: probability}`` over successors with nonzero
    probability.  The probability of moving to ``s'`` is
    ``binom(m, c)^-1 * u(s', rho') / u(s, rho)``, which reduces to
    ``mu(s', rho') / mu(s, rho)``.  With ``exact`` the values are Fractions.
    """
    state = tuple(int(x) for x in state)
    remaining_cols = tuple(int(x) for x in remaining_cols)
    m = len(state) if m is None else m
    if not remaining_cols:
        raise ValueError("no column left to place")
    here = dp_count(Instance(state, remaining_cols))
    if here == 0:
        raise DeadState(f"no completion from state {state}")
    c, rest = remaining_cols[0], remaining_cols[1:]
    if comb(m, c) > 10 ** 4:
        raise TooLarge(f"{comb(m, c)} successors")
    out = {}
    for rows in combinations(range(m), c):
        nxt = list(state)
        for i in rows:
            nxt[i] -= 1
        if min(nxt, default=0) < 0:
            continue
        there = dp_count(Instance(tuple(nxt), rest)) if rest else int(not any(nxt))
        if there:
            p = Fraction(there, here)
            out[tuple(nxt)] = p if exact else float(p)
    return out


def h_transform_paths(instance: Instance):
    """Yield ``(path_probability, likelihood)`` for every path under Q*.

    The likelihood multiplies the per-step ratio of the uniform column
    probability ``binom(m, c)^-1`` to the Q* probability, as Fractions.
    """
    m = instance.m
    cols = instance.cols

    def walk(k, state, prob, lik):
        if k == len(cols):
            yield prob, lik
            return
        kernel = h_transform_kernel(state, cols[k:], m, exact=True)
        base = Fraction(1, comb(m, cols[k]))
        for nxt, q in kernel.items():
            yield from walk(k + 1, nxt, prob * q, lik * base / q)

    if dp_count(instance) == 0:
        return
    yield from walk(0, tuple(instance.rows), Fraction(1), Fraction(1))


def h_transform_walk(instance: Instance, rng) -> Fraction:
    """Simulate one Q* path and return its likelihood product (exact)."""
    m = instance.m
    cols = instance.cols
    state = tuple(instance.rows)
    lik = Fraction(1)
    for k in range(len(cols)):
        kernel = h_transform_kernel(state, cols[k:], m, exact=True)
        u = rng.random()
        acc = 0.0
        choice = None
        for nxt, q in kernel.items():
            acc += float(q)
            choice = nxt
            if u < acc:
                break
        q = kernel[choice]
        lik *= Fraction(1, comb(m, cols[k])) / q
        state = choice
    return lik


def exhaustive_grid(max_m: int, max_n: int, max_margin: int):
    """All (rows, cols) with ``1 <= m <= max_m``, ``1 <= n <= max_n``, margins in
    ``1..max_margin`` and equal totals.  Infeasible pairs are included."""
    for m in range(1, max_m + 1):
        for n in range(1, max_n + 1):
            for rows in product(range(1, max_margin + 1), repeat=m):
                total = sum(rows)
                for cols in product(range(1, max_margin + 1), repeat=n):
                    if sum(cols) == total:
                        yield Instance(rows, cols)
