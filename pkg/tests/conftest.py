import numpy as np
import pytest

from robustmv import AmbiguitySet

ACCEPTANCE_LINES = []


@pytest.fixture
def corr_set():
    return AmbiguitySet.ambiguous_correlation(1.0, 1.0, 0.0, 0.95)


@pytest.fixture
def vol_set():
    return AmbiguitySet.uncertain_volatility([0.15], [0.45])


def brute_force_min(f, lo, hi, n=100_001, refine=True):
    """Minimise a scalar function by dense grid plus a fine local grid around the best point."""
    grid = np.linspace(lo, hi, n)
    vals = np.array([f(t) for t in grid])
    i = int(np.argmin(vals))
    if not refine:
        return grid[i], vals[i]
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    fine = np.linspace(a, b, 2001)
    fvals = np.array([f(t) for t in fine])
    j = int(np.argmin(fvals))
    return fine[j], fvals[j]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
