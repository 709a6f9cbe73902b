"""Log-space aggregation of replications and replication-count planning."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .core import Instance, SequenceDiagnostics
from .errors import AllFailed, RateDegenerate

MINUS_INFINITY = -math.inf


@dataclass(frozen=True)
class EstimateSummary:
    reps: int
    log_mu_hat: float
    log_second_moment: float
    cv_hat: float
    rel_std_err: float
    acceptance_rate: float
    log_u_hat: float
    ci_log_lower: float | None
    ci_log_upper: float | None
    confidence: float = 0.95
    chebyshev_rel_halfwidth: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _log_estimates(results) -> np.ndarray:
    if isinstance(results, np.ndarray):
        return results.astype(np.float64, copy=False)
    return np.array([r.log_count_estimate for r in results], dtype=np.float64)


def aggregate(results, log_eta: float = 0.0, confidence: float = 0.95) -> EstimateSummary:
    """Summarize replications given as ReplicationResults or raw log estimates.

    Failed replications count as zeros.  Sums go through ``math.fsum`` so the
    summary does not depend on the order of ``results``.
    """
    logs = _log_estimates(results)
    k = len(logs)
    if k < 2:
        raise ValueError("aggregate needs at least two replications")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    ok = logs > MINUS_INFINITY
    acceptance = float(ok.sum()) / k
    if not ok.any():
        summary = EstimateSummary(k, MINUS_INFINITY, MINUS_INFINITY, 0.0, 0.0, 0.0,
                                  MINUS_INFINITY, None, None, confidence, None)
        raise AllFailed(f"all {k} replications stopped early", summary)
    top = float(logs.max())
    ratios = np.exp(logs - top)
    mean = math.fsum(ratios.tolist()) / k
    second = math.fsum((ratios * ratios).tolist()) / k
    var = math.fsum(((ratios - mean) ** 2).tolist()) / k
    cv = math.sqrt(var) / mean
    rse = cv / math.sqrt(k)
    log_mu = top + math.log(mean)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    return EstimateSummary(
        reps=k,
        log_mu_hat=log_mu,
        log_second_moment=2 * top + math.log(second),
        cv_hat=cv,
        rel_std_err=rse,
        acceptance_rate=acceptance,
        log_u_hat=log_mu - log_eta,
        ci_log_lower=log_mu - z * rse,
        ci_log_upper=log_mu + z * rse,
        confidence=confidence,
        chebyshev_rel_halfwidth=cv / math.sqrt(k * (1 - confidence)),
    )


def chebyshev_plan(cv: float, epsilon: float, delta: float) -> int:
    """Replications so that Chebyshev gives relative error ``epsilon`` w.p. ``1-delta``."""
    if cv < 0:
        raise ValueError("cv must be nonnegative")
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    k = cv * cv / (epsilon * epsilon * delta)
    # shave float noise so exact integers such as 2000 do not round up
    return max(1, math.ceil(k * (1 - 1e-12)))


def log_mgf(samples: Sequence[float], thetas: Sequence[float]) -> np.ndarray:
    """Empirical ``log mean exp(theta * x)`` for each theta."""
    x = np.asarray(samples, dtype=np.float64)
    out = []
    for th in thetas:
        a = th * x
        top = a.max()
        out.append(top + math.log(math.fsum(np.exp(a - top).tolist()) / len(x)))
    return np.array(out)


def rate_function(samples, h: float, thetas=None) -> float:
    """Grid Legendre transform ``max_theta theta*(1+h) - psi(theta)``."""
    if thetas is None:
        thetas = np.linspace(-4.0, 4.0, 81)
    thetas = np.asarray(thetas, dtype=np.float64)
    return float(np.max(thetas * (1 + h) - log_mgf(samples, thetas)))


def chernoff_plan(normalized_samples, epsilon: float, delta: float,
                  theta_min: float = -4.0, theta_max: float = 4.0, points: int = 81) -> int:
    """Replications from the plug-in Chernoff bound ``2 exp(-k min(I(e), I(-e)))``.

    ``normalized_samples`` are estimates divided by their mean.  A sample set
    with no spread has an unbounded rate and needs a single replication.
    Raises :class:`RateDegenerate` when the grid rate is numerically zero.
    """
    x = np.asarray(normalized_samples, dtype=np.float64)
    if len(x) < 100:
        raise ValueError("chernoff_plan needs at least 100 samples")
    if not (0 < epsilon and 0 < delta < 1):
        raise ValueError("epsilon must be positive and delta in (0, 1)")
    if np.ptp(x) <= 1e-12 * max(1.0, float(np.abs(x).max())):
        return 1
    thetas = np.linspace(theta_min, theta_max, points)
    rate = min(rate_function(x, epsilon, thetas), rate_function(x, -epsilon, thetas))
    if rate <= 1e-12:
        raise RateDegenerate(f"grid rate {rate:.3g} too small; use chebyshev_plan")
    return max(1, math.ceil(math.log(2 / delta) / rate))


@dataclass(frozen=True)
class EfficiencyReport:
    cv_hat: float
    fourth_moment_score: float
    d: int
    max_col: int
    max_row: int
    sqrt_d: float
    quarter_root_d: float
    col_square_ratio: float
    below_sqrt_d: bool
    below_quarter_root_d: bool
    outside_regime: bool

    def flags(self) -> dict:
        return {"max_col_below_sqrt_d": self.below_sqrt_d,
                "max_col_below_quarter_root_d": self.below_quarter_root_d,
                "outside_regime": self.outside_regime}

    def to_dict(self) -> dict:
        return asdict(self)


def efficiency_report(instance: Instance, summary: EstimateSummary | None,
                      diag: SequenceDiagnostics) -> EfficiencyReport:
    """Where the instance sits relative to the sparse regime the sampler is known to handle.

    ``below_sqrt_d`` tracks bounded variance (``max c_j`` small against
    ``sqrt(d)``); ``below_quarter_root_d`` tracks the exponential-moment
    regime.  Both are finite-size comparisons of an asymptotic condition.
    """
    d = instance.d
    max_c = max(instance.cols, default=0)
    sq = math.sqrt(d)
    qr = d ** 0.25
    below_sq = max_c < sq
    return EfficiencyReport(
        cv_hat=summary.cv_hat if summary is not None else float("nan"),
        fourth_moment_score=diag.fourth_moment_score,
        d=d,
        max_col=max_c,
        max_row=max(instance.rows, default=0),
        sqrt_d=sq,
        quarter_root_d=qr,
        col_square_ratio=sum(c * c for c in instance.cols) / d if d else 0.0,
        below_sqrt_d=below_sq,
        below_quarter_root_d=max_c < qr,
        outside_regime=not below_sq,
    )
