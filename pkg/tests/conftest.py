"""Shared fixtures and hypothesis profiles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from binseq import BinomialSeries
from binseq.montecarlo import boat_race_design, simulate_null, table1_design

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_series(rng: np.random.Generator, n: int, r: int = 2, mmax: int = 3, scale: float = 0.8) -> BinomialSeries:
    """Binomial series with an intercept, ``r - 1`` standard normal regressors
    and ``m_t`` uniform on ``1..mmax``."""
    X = np.column_stack([np.ones(n)] + [rng.standard_normal(n) for _ in range(r - 1)])
    beta = rng.uniform(-scale, scale, r)
    m = rng.integers(1, mmax + 1, n)
    pi = 1.0 / (1.0 + np.exp(-X @ beta))
    y = rng.binomial(m, pi)
    return BinomialSeries(y, m, X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def trend_series():
    """Replicate 0 of the n=200, m=2 trend design."""
    return simulate_null(table1_design(), 0)


@pytest.fixture(scope="session")
def binary_series():
    """Replicate 0 of the n=153 binary design with a normal covariate."""
    return simulate_null(boat_race_design(), 0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
