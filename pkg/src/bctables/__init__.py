"""Counting 0-1 tables with fixed row and column sums.

Sequential importance sampling with conditional-Poisson column proposals,
an exact dynamic-programming oracle and the sparse-regime asymptotic formula.
"""

from .core import Instance, gale_ryser_feasible, normalize, sequence_diagnostics
from .cp_sampler import CpDistribution, cp_log_pmf, sample_backward, sample_drafting
from .errors import BctError
from .harness import GeneratorSpec, compare_run, generate_instance, regular_instance
from .mckay import mckay_estimate
from .oracle import brute_force_count, dp_count, dp_count_log
from .sis_engine import ReplicationResult, run_batch, run_batch_arrays, run_replication
from .stats import EstimateSummary, aggregate, chebyshev_plan, chernoff_plan

__version__ = "0.1.0"

__all__ = [
    "BctError", "CpDistribution", "EstimateSummary", "GeneratorSpec", "Instance",
    "ReplicationResult", "aggregate", "brute_force_count", "chebyshev_plan",
    "chernoff_plan", "compare_run", "cp_log_pmf", "dp_count", "dp_count_log",
    "gale_ryser_feasible", "generate_instance", "mckay_estimate", "normalize",
    "regular_instance", "run_batch", "run_batch_arrays", "run_replication",
    "sample_backward", "sample_drafting", "sequence_diagnostics",
]
