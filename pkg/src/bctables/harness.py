"""Instance generators and side-by-side runs of sampler, oracle and approximation."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .core import Instance, gale_ryser_feasible, normalize
from .errors import GenerationExhausted, StateSpaceExceeded
from .mckay import mckay_estimate
from .oracle import dp_count
from .sis_engine import run_batch_arrays
from .stats import aggregate

RETRY_BUDGET = 1000


@dataclass(frozen=True)
class GeneratorSpec:
    m: int
    r_max: int
    c_cap_exponent: float
    seed: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")
        if not 0 < self.c_cap_exponent <= 0.5:
            raise ValueError("c_cap_exponent must lie in (0, 0.5]")


def column_cap(d: int, exponent: float) -> int:
    return max(1, math.ceil(d ** exponent))


def _attempt(spec, attempt):
    key = np.array([spec.seed & (2 ** 64 - 1), attempt], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    rows = rng.integers(1, spec.r_max + 1, size=spec.m)
    d = int(rows.sum())
    cap = column_cap(d, spec.c_cap_exponent)
    # enough columns open from the start that no column ever has to exceed the cap
    sizes = [0] * math.ceil(d / cap)
    for _ in range(d):
        open_cols = [j for j, x in enumerate(sizes) if x < cap]
        if not open_cols:
            sizes.append(0)
            open_cols = [len(sizes) - 1]
        sizes[open_cols[rng.integers(len(open_cols))]] += 1
    return normalize(Instance(rows.tolist(), sizes))


def generate_instance(spec: GeneratorSpec) -> Instance:
    """Random feasible instance with row sums in ``1..r_max`` and capped columns.

    Each unit of the total goes to a uniformly chosen column below the cap
    ``ceil(d ** c_cap_exponent)``.  Infeasible draws are redrawn with the next
    sub-seed, up to 1000 times.
    """
    for attempt in range(RETRY_BUDGET):
        inst = _attempt(spec, attempt)
        if gale_ryser_feasible(inst):
            return inst
    raise GenerationExhausted(f"no feasible instance after {RETRY_BUDGET} draws for {spec}")


def regular_instance(n: int, degree: int = 2, m: int | None = None) -> Instance:
    """All row sums and column sums equal to ``degree`` (n columns)."""
    m = n if m is None else m
    if n * degree % m:
        raise ValueError("n * degree must be divisible by m")
    return Instance((n * degree // m,) * m, (degree,) * n)


def all_ones_instance(n: int) -> Instance:
    return Instance((1,) * n, (1,) * n)


@dataclass
class ComparisonRecord:
    rows: list
    cols: list
    reps: int
    seed: int
    log_mu_exact: float | None
    mu_exact: int | None
    log_mu_approx: float
    log_mu_hat: float
    ci_log: list
    cv_hat: float
    rel_std_err: float
    acceptance_rate: float
    approx_log_error: float | None
    sis_log_error: float | None
    timing_ms: dict

    def to_dict(self) -> dict:
        return asdict(self)


def compare_run(instance: Instance, reps: int, seed: int, threads: int = 1,
                backend: str | None = None) -> ComparisonRecord:
    """Exact oracle, asymptotic approximation and sampler on one instance.

    Errors are differences of natural logs against the exact count; they are
    ``None`` when the oracle exceeds its state budget.
    """
    instance = normalize(instance)
    timing = {}
    t0 = time.perf_counter()
    try:
        exact = dp_count(instance)
    except StateSpaceExceeded:
        exact = None
    timing["oracle"] = 1e3 * (time.perf_counter() - t0)
    log_exact = None if exact is None else (math.log(exact) if exact > 0 else -math.inf)

    t0 = time.perf_counter()
    approx = mckay_estimate(instance)
    timing["approx"] = 1e3 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    batch = run_batch_arrays(instance, reps, seed, threads=threads, backend=backend)
    summary = aggregate(batch.log_estimates, approx.log_eta)
    timing["sis"] = 1e3 * (time.perf_counter() - t0)

    def err(x):
        if log_exact is None or not math.isfinite(log_exact):
            return None
        return x - log_exact

    return ComparisonRecord(
        rows=list(instance.rows), cols=list(instance.cols), reps=reps, seed=seed,
        log_mu_exact=log_exact, mu_exact=exact,
        log_mu_approx=approx.log_mu_approx, log_mu_hat=summary.log_mu_hat,
        ci_log=[summary.ci_log_lower, summary.ci_log_upper],
        cv_hat=summary.cv_hat, rel_std_err=summary.rel_std_err,
        acceptance_rate=summary.acceptance_rate,
        approx_log_error=err(approx.log_mu_approx), sis_log_error=err(summary.log_mu_hat),
        timing_ms=timing,
    )
