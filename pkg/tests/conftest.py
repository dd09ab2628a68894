import math

import numpy as np
import pytest

from jetcartan.geometry import SpatialMetric, TemporalMetric
from jetcartan.symexpr import ONE, ZERO, parse_expr
from jetcartan.verify import SamplingPlan

SPHERE_DOMAIN = {"x1": (0.3, math.pi - 0.3)}


def diag_metric(entries, n):
    arr = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            arr[i, j] = parse_expr(entries[i], n) if i == j else ZERO
    return SpatialMetric(arr)


@pytest.fixture
def flat2():
    return TemporalMetric(ONE), diag_metric(["1", "1"], 2)


@pytest.fixture
def sphere():
    return TemporalMetric(parse_expr("1 + t^2", 2)), diag_metric(["1", "sin(x1)^2"], 2)


@pytest.fixture
def sphere_plan():
    return SamplingPlan(seed=7, count=100, domain=SPHERE_DOMAIN, abs_tol=1e-9, rel_tol=1e-9)


_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for the acceptance summary."""

    def record(number, ok, detail):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
