"""Conditional-Poisson sampling of fixed-size subsets.

A CP distribution over ``u`` units with weights ``w`` and sample size ``c``
gives each size-``c`` subset probability proportional to the product of its
weights.  Everything here works on log weights; ``-inf`` stands for zero.

Two exact samplers are provided.  :func:`sample_drafting` picks one unit per
draw with probability ``w_j * e(t-1, R - {j}) / (t * e(t, R))`` where ``R`` is
the set of units still available, ``t`` the number still to pick and ``e`` the
elementary symmetric sum; every ``e`` value is rebuilt from scratch on the
restricted unit set.  :func:`sample_backward` scans the units once from the
end using prefix sums from :func:`esp_build` and serves as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import WrongSubsetSize

NEG_INF = -math.inf


class OpCounter:
    """Counts inner-loop updates (log-add-exp calls and per-unit evaluations)."""

    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def log_add_exp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def log_esp_vector(log_weights, units, order, skip=-1, counter=None):
    """Log elementary symmetric sums of orders ``0..order`` over ``units``.

    ``units`` indexes into ``log_weights``; the unit equal to ``skip`` is left
    out.  The compiled kernel performs the identical sequence of updates.
    """
    buf = [0.0] + [NEG_INF] * order
    seen = 0
    ops = 0
    for u in units:
        if u == skip:
            continue
        seen += 1
        lw = log_weights[u]
        for i in range(min(order, seen), 0, -1):
            buf[i] = log_add_exp(buf[i], buf[i - 1] + lw)
            ops += 1
    if counter is not None:
        counter.n += ops
    return buf


@dataclass(frozen=True)
class CpDistribution:
    log_weights: tuple
    c: int

    def __post_init__(self):
        object.__setattr__(self, "log_weights", tuple(float(x) for x in self.log_weights))
        if not 0 <= self.c <= len(self.log_weights):
            raise ValueError(f"sample size {self.c} not in [0, {len(self.log_weights)}]")
        if not all(math.isfinite(x) for x in self.log_weights):
            raise ValueError("log weights must be finite")

    @classmethod
    def from_weights(cls, weights: Sequence[float], c: int) -> "CpDistribution":
        return cls(tuple(math.log(w) for w in weights), c)

    @property
    def units(self) -> int:
        return len(self.log_weights)


@dataclass(frozen=True)
class EspTable:
    """``log_esp[i][j]`` is the log ESP of order ``i`` over the first ``j`` units."""

    log_esp: tuple

    def __getitem__(self, ij):
        i, j = ij
        return self.log_esp[i][j]

    @property
    def log_normalizer(self) -> float:
        return self.log_esp[-1][-1]


def esp_build(dist: CpDistribution) -> EspTable:
    c, u, lw = dist.c, dist.units, dist.log_weights
    table = [[NEG_INF] * (u + 1) for _ in range(c + 1)]
    table[0] = [0.0] * (u + 1)
    for j in range(1, u + 1):
        for i in range(1, min(c, j) + 1):
            table[i][j] = log_add_exp(table[i][j - 1], table[i - 1][j - 1] + lw[j - 1])
    return EspTable(tuple(tuple(row) for row in table))


def cp_log_pmf(dist: CpDistribution, subset, table: EspTable | None = None) -> float:
    subset = tuple(subset)
    if len(subset) != dist.c or len(set(subset)) != dist.c:
        raise WrongSubsetSize(f"expected {dist.c} distinct units, got {subset!r}")
    if table is None:
        table = esp_build(dist)
    return math.fsum(dist.log_weights[j] for j in subset) - table.log_normalizer


def inclusion_probabilities(dist: CpDistribution) -> list:
    """``pi_j = w_j e(c-1, A - {j}) / e(c, A)``; sums to ``c``."""
    if dist.c == 0:
        return [0.0] * dist.units
    units = range(dist.units)
    log_z = log_esp_vector(dist.log_weights, units, dist.c)[dist.c]
    out = []
    for j in units:
        rest = log_esp_vector(dist.log_weights, units, dist.c - 1, skip=j)[dist.c - 1]
        out.append(math.exp(dist.log_weights[j] + rest - log_z))
    return out


def esp_scaled(xs, units, order, skip=-1, counter=None):
    """Elementary symmetric sums of orders ``0..order`` of plain weights ``xs``.

    Used on max-shifted weights (all in ``(0, 1]``), where the only failure
    modes are overflow to ``inf`` and underflow to 0; callers fall back to :func:`log_esp_vector`.
    """
    buf = [1.0] + [0.0] * order
    seen = 0
    ops = 0
    for u in units:
        if u == skip:
            continue
        seen += 1
        x = xs[u]
        for i in range(min(order, seen), 0, -1):
            buf[i] = buf[i] + buf[i - 1] * x
            ops += 1
    if counter is not None:
        counter.n += ops
    return buf


def _drafting_probs_log(log_weights, remaining, t, counter):
    log_z = log_esp_vector(log_weights, remaining, t, counter=counter)[t]
    log_t = math.log(t)
    out = []
    for j in remaining:
        if t > 1:
            rest = log_esp_vector(log_weights, remaining, t - 1, skip=j, counter=counter)[t - 1]
        else:
            rest = 0.0
        out.append(math.exp(log_weights[j] + rest - log_t - log_z))
    if counter is not None:
        counter.n += len(remaining)
    return log_z, out


def drafting_probs(log_weights, remaining, t, counter=None, log_domain=False):
    """Selection probabilities for one drafting draw.

    ``remaining`` lists the unit ids still available and ``t`` how many are
    still to be picked.  Returns ``(log e(t, R), [p_j for j in remaining])``.
    Weights are shifted by their maximum before the sums are formed; if that
    overflows or underflows, or ``log_domain`` is set, everything is done with
    log-add-exp.
    """
    if not log_domain:
        shift = max(log_weights[j] for j in remaining)
        xs = {j: math.exp(log_weights[j] - shift) for j in remaining}
        z = esp_scaled(xs, remaining, t, counter=counter)[t]
        if 0.0 < z < math.inf:
            tz = t * z
            out = []
            for j in remaining:
                rest = esp_scaled(xs, remaining, t - 1, skip=j, counter=counter)[t - 1] if t > 1 else 1.0
                out.append(xs[j] * rest / tz)
            if counter is not None:
                counter.n += len(remaining)
            if all(math.isfinite(p) for p in out):
                return math.log(z) + t * shift, out
    return _drafting_probs_log(log_weights, remaining, t, counter)


def _pick(probs, u):
    acc = 0.0
    last = -1
    for pos, p in enumerate(probs):
        if p <= 0.0:
            continue
        acc += p
        last = pos
        if u < acc:
            return pos
    # rounding left u above the accumulated mass
    return last


def draft(log_weights, units, c, rng, counter=None, log_domain=False):
    """Drafting draw of ``c`` of ``units``; returns ``(chosen, log e(c, units))``.

    ``chosen`` lists unit ids in draw order.
    """
    remaining = list(units)
    chosen = []
    log_norm = 0.0
    for k in range(1, c + 1):
        t = c - k + 1
        log_z, probs = drafting_probs(log_weights, remaining, t, counter, log_domain)
        if k == 1:
            log_norm = log_z
        pos = _pick(probs, rng.random())
        chosen.append(remaining.pop(pos))
    return chosen, log_norm


def sample_drafting(dist: CpDistribution, rng, counter=None, log_domain=False) -> tuple:
    chosen, _ = draft(dist.log_weights, range(dist.units), dist.c, rng, counter, log_domain)
    return tuple(sorted(chosen))


def _backward_log_prob(table, lw, j, i):
    # include unit j (0-based) when i slots remain among the first j+1 units
    return lw[j] + table[i - 1, j] - table[i, j + 1]


def sample_backward(dist: CpDistribution, rng, table: EspTable | None = None) -> tuple:
    if table is None:
        table = esp_build(dist)
    lw = dist.log_weights
    i = dist.c
    chosen = []
    for j in range(dist.units - 1, -1, -1):
        if i == 0:
            break
        if i == j + 1 or rng.random() < math.exp(_backward_log_prob(table, lw, j, i)):
            chosen.append(j)
            i -= 1
    return tuple(sorted(chosen))


def drafting_pmf(dist: CpDistribution, log_domain=False) -> dict:
    """Exact subset distribution of :func:`sample_drafting` by path enumeration."""
    out = {}

    def walk(remaining, chosen, prob, t):
        if t == 0:
            key = tuple(sorted(chosen))
            out[key] = out.get(key, 0.0) + prob
            return
        _, probs = drafting_probs(dist.log_weights, remaining, t, log_domain=log_domain)
        for pos, p in enumerate(probs):
            if p <= 0.0:
                continue
            walk(remaining[:pos] + remaining[pos + 1:], chosen + [remaining[pos]],
                 prob * p, t - 1)

    walk(list(range(dist.units)), [], 1.0, dist.c)
    return out


def backward_pmf(dist: CpDistribution) -> dict:
    """Exact subset distribution of :func:`sample_backward` by path enumeration."""
    table = esp_build(dist)
    lw = dist.log_weights
    out = {}

    def walk(j, i, chosen, prob):
        if i == 0:
            key = tuple(sorted(chosen))
            out[key] = out.get(key, 0.0) + prob
            return
        if j < 0:
            return
        p = 1.0 if i == j + 1 else math.exp(_backward_log_prob(table, lw, j, i))
        if p > 0:
            walk(j - 1, i - 1, chosen + [j], prob * p)
        if p < 1:
            walk(j - 1, i, chosen, prob * (1 - p))

    walk(dist.units - 1, dist.c, [], 1.0)
    return out


def cp_pmf(dist: CpDistribution) -> dict:
    table = esp_build(dist)
    return {s: math.exp(cp_log_pmf(dist, s, table))
            for s in combinations(range(dist.units), dist.c)}
