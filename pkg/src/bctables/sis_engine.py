"""Sequential importance sampler for 0-1 tables with fixed margins.

Columns are placed largest first.  For each column the rows that still need
ones form the active set; the column's ones go to a CP-distributed subset of
those rows with log weights ``ln s_i + 2 gamma s_i``.  The log of the
reciprocal proposal probability accumulates into ``log_l``; its exponential
is an unbiased estimate of the number of tables.  A replication stops early
(estimate zero) as soon as fewer active rows remain than the next column sum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _backend
from .core import Instance, normalize, sequence_diagnostics, vector_falling_sum
from .cp_sampler import CpDistribution, OpCounter, draft, drafting_pmf, esp_build
from .errors import InsufficientActiveRows
from .rng import PhiloxStream

MINUS_INFINITY = -math.inf


@dataclass
class WalkState:
    residuals: list
    cols: tuple
    col_index: int = 0
    gamma: float = 0.0
    log_l: float = 0.0

    @property
    def remaining_cols(self) -> tuple:
        return self.cols[self.col_index:]


@dataclass(frozen=True)
class ReplicationResult:
    log_count_estimate: float
    completed: bool
    steps_taken: int
    fourth_moment_score: float = 0.0
    ops: int = field(default=0, compare=False)


class BatchArrays(NamedTuple):
    log_estimates: np.ndarray
    steps: np.ndarray
    ops: np.ndarray


def step_gamma(remaining_cols_after_pop) -> float:
    """``[rho]_2 / (2 [rho]_1^2)`` for the columns still to come; 0 if none."""
    total = sum(remaining_cols_after_pop)
    if total == 0:
        return 0.0
    return vector_falling_sum(remaining_cols_after_pop, 2) / (2 * total * total)


def _tails(cols):
    n = len(cols)
    t1 = [0] * (n + 1)
    t2 = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        t1[k] = t1[k + 1] + cols[k]
        t2[k] = t2[k + 1] + cols[k] * (cols[k] - 1)
    return t1, t2


def _gamma_from_tails(t1, t2, k):
    # gamma for the step that places column k (0-based)
    if t1[k + 1] == 0:
        return 0.0
    return t2[k + 1] / (2 * t1[k + 1] * t1[k + 1])


def _log_weights(residuals, gamma):
    return [math.log(s) + 2.0 * gamma * s if s > 0 else MINUS_INFINITY for s in residuals]


def column_distribution(state: WalkState, col_sum: int) -> CpDistribution:
    """CP distribution over the active rows, in increasing row order."""
    active = [s for s in state.residuals if s > 0]
    if len(active) < col_sum:
        raise InsufficientActiveRows(
            f"{len(active)} active rows for a column sum of {col_sum}")
    g = state.gamma
    return CpDistribution(tuple(math.log(s) + 2.0 * g * s for s in active), col_sum)


def run_replication(instance: Instance, rng, counter: OpCounter | None = None,
                    fourth_moment_score: float = 0.0, log_domain: bool = False) -> ReplicationResult:
    """One pass of the sampler on a normalized instance (pure Python).

    ``rng`` only needs a ``random()`` method returning uniforms in [0, 1).
    """
    cols = instance.cols
    n = len(cols)
    t1, t2 = _tails(cols)
    s = list(instance.rows)
    log_l = 0.0
    own = counter if counter is not None else OpCounter()
    for k in range(n):
        c = cols[k]
        active = [i for i, x in enumerate(s) if x > 0]
        if len(active) < c:
            return ReplicationResult(MINUS_INFINITY, False, k, fourth_moment_score, own.n)
        gamma = _gamma_from_tails(t1, t2, k)
        lw = _log_weights(s, gamma)
        own.n += len(active)
        chosen, log_norm = draft(lw, active, c, rng, own, log_domain)
        sub = 0.0
        for i in chosen:
            sub += lw[i]
            s[i] -= 1
        log_l += log_norm - sub
    return ReplicationResult(log_l, True, n, fourth_moment_score, own.n)


def _chunks(reps, threads):
    threads = max(1, min(threads, reps))
    bounds = np.linspace(0, reps, threads + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_batch_arrays(instance: Instance, reps: int, seed: int, threads: int = 1,
                     backend: str | None = None, start: int = 0,
                     log_domain: bool = False) -> BatchArrays:
    """Replications ``start .. start+reps-1`` as arrays indexed by replication.

    Replication ``i`` always draws from ``PhiloxStream(seed, i)``, so the
    output does not depend on ``threads``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    instance = normalize(instance)
    backend = _backend.resolve(backend)
    seed = int(seed) & ((1 << 64) - 1)
    out_log = np.empty(reps, dtype=np.float64)
    out_steps = np.empty(reps, dtype=np.int64)
    out_ops = np.empty(reps, dtype=np.int64)
    if backend == "compiled":
        rows = np.asarray(instance.rows, dtype=np.int64)
        cols = np.asarray(instance.cols, dtype=np.int64)

        def job(bounds):
            a, b = bounds
            _backend.kernels.run_chunk(rows, cols, seed, start + a, b - a,
                                       out_log[a:b], out_steps[a:b], out_ops[a:b], log_domain)
    else:
        def job(bounds):
            a, b = bounds
            lg, st, op = out_log[a:b], out_steps[a:b], out_ops[a:b]
            for pos, idx in enumerate(range(start + a, start + b)):
                res = run_replication(instance, PhiloxStream(seed, idx), log_domain=log_domain)
                lg[pos] = res.log_count_estimate
                st[pos] = res.steps_taken
                op[pos] = res.ops

    parts = _chunks(reps, threads)
    if len(parts) == 1:
        job(parts[0])
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            list(pool.map(job, parts))
    return BatchArrays(out_log, out_steps, out_ops)


def run_batch(instance: Instance, reps: int, seed: int, threads: int = 1,
              backend: str | None = None) -> list:
    instance = normalize(instance)
    arrays = run_batch_arrays(instance, reps, seed, threads=threads, backend=backend)
    score = sequence_diagnostics(instance.cols).fourth_moment_score
    n = instance.n
    return [ReplicationResult(float(lg), int(st) == n, int(st), score, int(op))
            for lg, st, op in zip(arrays.log_estimates, arrays.steps, arrays.ops)]


def exact_expectation(instance: Instance, log_domain: bool = False) -> float:
    """Exact mean of ``exp(log_count_estimate)`` by enumerating every path.

    Each column's subset distribution comes from :func:`drafting_pmf`, i.e.
    the drafting selection probabilities themselves, and each path's weight is
    the estimator increment the sampler would record.  Meant for tiny
    instances only.
    """
    instance = normalize(instance)
    cols = instance.cols
    n = len(cols)
    t1, t2 = _tails(cols)

    @lru_cache(maxsize=None)
    def value(k, residuals):
        if k == n:
            return 1.0
        c = cols[k]
        active = [i for i, x in enumerate(residuals) if x > 0]
        if len(active) < c:
            return 0.0
        gamma = _gamma_from_tails(t1, t2, k)
        lw = _log_weights(residuals, gamma)
        dist = CpDistribution(tuple(lw[i] for i in active), c)
        log_norm = esp_build(dist).log_normalizer
        total = 0.0
        for subset, prob in drafting_pmf(dist, log_domain).items():
            rows = [active[u] for u in subset]
            inc = log_norm - math.fsum(lw[i] for i in rows)
            nxt = list(residuals)
            for i in rows:
                nxt[i] -= 1
            total += prob * math.exp(inc) * value(k + 1, tuple(nxt))
        return total

    return value(0, tuple(instance.rows))

