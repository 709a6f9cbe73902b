"""Sparse-regime asymptotic count ``mu ~ phi * exp(-alpha)`` in log form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import Instance, vector_falling_sum
from .errors import ColumnExceedsRows


@dataclass(frozen=True)
class ApproxCount:
    log_phi: float
    alpha: float
    log_eta: float
    log_mu_approx: float
    log_v: float


def log_factorial(k: int) -> float:
    return math.lgamma(k + 1)


def log_binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def phi_log(instance: Instance) -> float:
    """``ln d! - sum ln r_i! - sum ln c_j!``."""
    # single fsum keeps the value exactly symmetric under transposition
    terms = [-log_factorial(x) for x in instance.rows + instance.cols]
    terms.append(log_factorial(instance.d))
    return math.fsum(terms)


def alpha(instance: Instance) -> float:
    d = instance.d
    if d == 0:
        return 0.0
    num = vector_falling_sum(instance.cols, 2) * vector_falling_sum(instance.rows, 2)
    return num / (2 * d * d)


def eta_log(cols: Sequence[int], m: int) -> float:
    """Log of the number of m-row 0-1 tables with column sums ``cols``."""
    for c in cols:
        if c > m:
            raise ColumnExceedsRows(f"column sum {c} exceeds row count {m}")
    return math.fsum(log_binom(m, c) for c in cols)


def mckay_estimate(instance: Instance) -> ApproxCount:
    lp = phi_log(instance)
    a = alpha(instance)
    le = eta_log(instance.cols, instance.m)
    lmu = lp - a
    return ApproxCount(log_phi=lp, alpha=a, log_eta=le,
                       log_mu_approx=lmu, log_v=lmu - le)
