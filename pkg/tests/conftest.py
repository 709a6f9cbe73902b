import itertools
import math
from functools import lru_cache
from math import comb, exp

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def naive_count(rows, cols):
    """Count 0-1 matrices by listing every row pattern combination (tiny inputs)."""
    m, n = len(rows), len(cols)
    if sum(rows) != sum(cols):
        return 0
    choices = [[p for p in itertools.combinations(range(n), r)] for r in rows]
    total = 0
    for pick in itertools.product(*choices):
        col = [0] * n
        for p in pick:
            for j in p:
                col[j] += 1
        total += col == list(cols)
    return total


def regular2_acceptance(n):
    """Exact completion probability of the sampler on the n x n all-2 instance.

    Rows are exchangeable, so the walk reduces to the counts of rows with
    residual 1 and 2; the column proposal over those classes is written out
    directly from the CP weights s*exp(2*gamma*s).
    """

    @lru_cache(maxsize=None)
    def p(k, n1, n2):
        if k == n:
            return 1.0
        if n1 + n2 < 2:
            return 0.0
        rem = n - k - 1
        g = 0.0 if rem == 0 else (2 * rem) / (2 * (2 * rem) ** 2)
        w1, w2 = exp(2 * g), 2 * exp(4 * g)
        opts = []
        for k1 in range(3):
            k2 = 2 - k1
            if k1 <= n1 and k2 <= n2:
                opts.append((comb(n1, k1) * comb(n2, k2) * w1 ** k1 * w2 ** k2,
                             n1 - k1 + k2, n2 - k2))
        z = sum(o[0] for o in opts)
        return sum(w / z * p(k + 1, a, b) for w, a, b in opts)

    return p(0, 0, n)


@pytest.fixture
def ln():
    return math.log


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
