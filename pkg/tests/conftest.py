from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def positive_rationals(max_num: int = 9, max_den: int = 9):
    return st.builds(Fraction, st.integers(1, max_num), st.integers(1, max_den))


def rate_vectors(length: int):
    return st.lists(positive_rationals(), min_size=length, max_size=length)


def random_rates(rng: random.Random, length: int) -> list:
    return [Fraction(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(length)]


def reference_T(c, j, n):
    """Move on compositions via the uncapped bin picture, then keep the first ``n`` balls."""
    bins = list(c)
    if j == 0:
        bins = [1] + bins
    elif j <= len(bins):
        bins[j - 1] += 1
    out, total = [], 0
    for b in bins:
        take = min(b, n - total)
        if take == 0:
            break
        out.append(take)
        total += take
    return tuple(out)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
