import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def int_steps(max_n=8, max_d=3, lo=-3, hi=3, min_n=0):
    """Integer increment arrays of shape (N, d)."""
    return st.integers(1, max_d).flatmap(
        lambda d: st.integers(min_n, max_n).flatmap(
            lambda n: hnp.arrays(np.int64, (n, d), elements=st.integers(lo, hi))))


def float_steps(max_n=12, d=2):
    return st.integers(1, max_n).flatmap(
        lambda n: hnp.arrays(np.float64, (n, d),
                             elements=st.floats(-3, 3, allow_nan=False, width=64)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
