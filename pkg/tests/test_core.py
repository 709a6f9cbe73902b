import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bctables.core import (Instance, falling_factorial, gale_ryser_feasible, normalize,
                           power_sum, sequence_diagnostics, vector_falling_sum)
from bctables.errors import MarginMismatch

from conftest import naive_count


def test_normalize_strips_zero_column():
    out = normalize(Instance((1, 1), (1, 0, 1)))
    assert out.rows == (1, 1) and out.cols == (1, 1) and out.d == 2


def test_normalize_sorts_columns_only():
    out = normalize(Instance((1, 2, 1), (1, 1, 2)))
    assert out.cols == (2, 1, 1)
    assert out.rows == (1, 2, 1)
    assert out.d == 4


def test_normalize_rejects_mismatch():
    with pytest.raises(MarginMismatch):
        normalize(Instance((2, 1), (1, 1)))


def test_negative_margin_rejected():
    with pytest.raises(ValueError):
        Instance((1, -1), (0,))


margins = st.lists(st.integers(0, 6), max_size=8)


@given(margins, margins)
def test_normalize_idempotent(rows, cols):
    total = sum(rows) - sum(cols)
    cols = cols + ([total] if total > 0 else [])
    rows = rows + ([-total] if total < 0 else [])
    once = normalize(Instance(rows, cols))
    assert normalize(once) == once
    assert all(c > 0 for c in once.cols) and list(once.cols) == sorted(once.cols, reverse=True)


@pytest.mark.parametrize("s,k,expected", [(5, 2, 20), (3, 0, 1), (2, 4, 0), (4, 4, 24), (0, 1, 0)])
def test_falling_factorial(s, k, expected):
    assert falling_factorial(s, k) == expected


@given(st.integers(0, 50), st.integers(0, 8))
def test_falling_factorial_matches_perm(s, k):
    assert falling_factorial(s, k) == math.perm(s, k)


@pytest.mark.parametrize("s,k,expected", [((2, 2), 2, 4), ((1, 1, 1), 2, 0), ((3, 2, 1), 2, 8)])
def test_vector_falling_sum(s, k, expected):
    assert vector_falling_sum(s, k) == expected


@given(st.lists(st.integers(0, 10 ** 4), max_size=30))
def test_falling_sum_identity(s):
    assert vector_falling_sum(s, 2) == power_sum(s, 2) - power_sum(s, 1)


def test_falling_sum_large_values_exact():
    # no overflow: 4th falling factorial of 10**6 repeated
    s = [10 ** 6] * 1000
    assert vector_falling_sum(s, 4) == 1000 * math.perm(10 ** 6, 4)


@pytest.mark.parametrize("rows,cols,expected", [
    ((1, 1), (1, 1), True),
    ((2, 2, 0), (3, 1), False),
    ((2, 2), (2, 2), True),
    ((3,), (1, 1), False),
    ((1,), (2,), False),
])
def test_gale_ryser_examples(rows, cols, expected):
    assert gale_ryser_feasible(Instance(rows, cols)) is expected


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4),
       st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_gale_ryser_matches_enumeration(rows, cols):
    if sum(rows) != sum(cols):
        return
    inst = normalize(Instance(rows, cols))
    assert gale_ryser_feasible(inst) == (naive_count(inst.rows, inst.cols) > 0)


def test_sequence_diagnostics_examples():
    d = sequence_diagnostics((1, 1, 1))
    assert d.ratio_path == (1, 1, 1) and d.fourth_moment_score == 0
    d = sequence_diagnostics((2, 1))
    assert d.ratio_path == (Fraction(5, 3), Fraction(1)) and d.fourth_moment_score == 0
    d = sequence_diagnostics((4, 1, 1, 1, 1))
    assert d.fourth_moment_score == pytest.approx(0.375, abs=1e-15)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=60))
def test_ratio_path_nonincreasing(xs):
    xs.sort(reverse=True)
    path = sequence_diagnostics(xs).ratio_path
    assert len(path) == len(xs)
    assert all(a >= b for a, b in zip(path, path[1:]))


@given(st.lists(st.integers(1, 3), min_size=1, max_size=40))
def test_score_zero_below_four(xs):
    xs.sort(reverse=True)
    assert sequence_diagnostics(xs).fourth_moment_score == 0


def test_transpose_and_dict():
    inst = Instance((2, 1), (1, 1, 1))
    assert inst.transpose() == Instance((1, 1, 1), (2, 1))
    assert inst.to_dict() == {"rows": [2, 1], "cols": [1, 1, 1], "d": 3, "m": 2, "n": 3}
