import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bctables.core import Instance, normalize
from bctables.cp_sampler import OpCounter
from bctables.errors import InsufficientActiveRows
from bctables.harness import all_ones_instance, regular_instance
from bctables.rng import PhiloxStream
from bctables.sis_engine import (WalkState, column_distribution, exact_expectation, run_batch,
                                 run_batch_arrays, run_replication, step_gamma)
from bctables.stats import aggregate

from conftest import naive_count, regular2_acceptance


@pytest.mark.parametrize("rho,g", [((1, 1, 1), 0.0), ((2, 1), 1 / 9), ((), 0.0), ((3,), 6 / 18)])
def test_step_gamma(rho, g):
    assert step_gamma(rho) == pytest.approx(g, abs=1e-15)


def test_column_distribution_active_rows():
    state = WalkState([2, 0, 1], (2, 1), col_index=0, gamma=0.25)
    dist = column_distribution(state, 2)
    assert dist.c == 2
    assert dist.log_weights == pytest.approx((math.log(2) + 1.0, 0.5))
    with pytest.raises(InsufficientActiveRows):
        column_distribution(WalkState([1, 0, 0], (2,)), 2)


@pytest.mark.parametrize("n", [1, 2, 5, 8, 12])
def test_zero_variance_all_ones(n):
    inst = all_ones_instance(n)
    for r in run_batch(inst, 100, seed=n):
        assert r.completed and r.steps_taken == n
        assert r.log_count_estimate == pytest.approx(math.lgamma(n + 1), abs=1e-9)


def test_forced_single_column():
    r = run_replication(Instance((1, 1), (2,)), PhiloxStream(0, 0))
    assert r.completed and r.log_count_estimate == pytest.approx(0.0, abs=1e-15)


def test_small_instance_statistically_unbiased():
    logs = run_batch_arrays(Instance((2, 1, 1), (2, 1, 1)), 10 ** 5, seed=11).log_estimates
    s = aggregate(logs)
    assert abs(math.exp(s.log_mu_hat) / 5 - 1) <= 3 * s.rel_std_err + 1e-12


def test_regular6_statistically_unbiased():
    s = aggregate(run_batch_arrays(regular_instance(6), 10 ** 5, seed=3).log_estimates)
    assert abs(math.exp(s.log_mu_hat) / 67950 - 1) <= 3 * s.rel_std_err


def test_batch_deterministic():
    inst = Instance((2, 1, 1), (2, 1, 1))
    assert run_batch(inst, 10, 7) == run_batch(inst, 10, 7)


def test_infeasible_never_completes():
    res = run_batch(normalize(Instance((2, 2, 0), (3, 1))), 100, 1)
    assert not any(r.completed for r in res)
    assert all(r.log_count_estimate == -math.inf for r in res)


def test_threads_do_not_change_output():
    inst = regular_instance(12)
    a = run_batch_arrays(inst, 257, 5, threads=1)
    b = run_batch_arrays(inst, 257, 5, threads=4)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_start_offset_continues_stream():
    inst = regular_instance(8)
    full = run_batch_arrays(inst, 50, 9).log_estimates
    tail = run_batch_arrays(inst, 20, 9, start=30).log_estimates
    assert np.array_equal(full[30:], tail)


def test_acceptance_rate_matches_exact_probability():
    # exact completion probability from a class-count recursion
    n = 20
    p = regular2_acceptance(n)
    logs = run_batch_arrays(regular_instance(n), 20000, 4).log_estimates
    rate = np.mean(logs > -np.inf)
    assert abs(rate - p) < 4 * math.sqrt(p * (1 - p) / len(logs))


tiny = st.lists(st.integers(1, 3), min_size=1, max_size=3)


@settings(max_examples=60)
@given(tiny, tiny)
def test_exact_expectation_equals_count(rows, cols):
    if sum(rows) != sum(cols):
        return
    inst = normalize(Instance(rows, cols))
    mu = naive_count(inst.rows, inst.cols)
    got = exact_expectation(inst)
    if mu == 0:
        assert got == 0
    else:
        assert got == pytest.approx(mu, rel=1e-9)


def test_conservation_along_walk():
    # residual mass equals remaining column mass after every step
    inst = regular_instance(10)
    rng = PhiloxStream(2, 0)
    s = list(inst.rows)
    from bctables.cp_sampler import draft
    from bctables.sis_engine import _gamma_from_tails, _log_weights, _tails
    t1, t2 = _tails(inst.cols)
    for k, c in enumerate(inst.cols):
        active = [i for i, x in enumerate(s) if x > 0]
        if len(active) < c:
            break
        lw = _log_weights(s, _gamma_from_tails(t1, t2, k))
        chosen, _ = draft(lw, active, c, rng)
        for i in chosen:
            s[i] -= 1
        assert sum(s) == sum(inst.cols[k + 1:])


def test_ops_reported():
    ctr = OpCounter()
    r = run_replication(regular_instance(10), PhiloxStream(1, 1), counter=ctr)
    assert r.ops == ctr.n > 0
