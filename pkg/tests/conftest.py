import math

import numpy as np
import pytest
from scipy import integrate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ks_statistic(samples, cdf_values_sorted):
    """One-sample KS distance given the oracle CDF at the sorted samples."""
    n = len(samples)
    F = np.asarray(cdf_values_sorted)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def tabulated_cdf(density, lower, upper, num=20001):
    """CDF of an unnormalized density on [lower, upper] by piecewise adaptive quadrature.

    Returns a callable that interpolates linearly between the quadrature nodes.
    """
    nodes = np.linspace(lower, upper, num)
    pieces = [integrate.quad(density, a, b, epsabs=0, epsrel=1e-12)[0] for a, b in zip(nodes[:-1], nodes[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    cum /= cum[-1]
    return lambda t: np.interp(t, nodes, cum)


def batch_means_se(x, batches=50):
    x = np.asarray(x, dtype=float)
    m = x[: len(x) // batches * batches].reshape(batches, -1).mean(axis=1)
    return float(m.std(ddof=1) / math.sqrt(batches))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
