from __future__ import annotations

import sys

import numpy as np
import pytest

from robavg.candidates import all_subsets_with_intercept
from robavg.regression import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_linear(rng, n=60, p=3, noise=1.0, intercept=True):
    X = rng.uniform(-2, 2, size=(n, p))
    if intercept:
        X = np.column_stack([np.ones(n), X])
    beta = np.linspace(1.0, 0.2, X.shape[1])
    y = X @ beta + noise * rng.standard_normal(n)
    return Dataset(X, y)


@pytest.fixture
def small_problem(rng):
    data = make_linear(rng, n=40, p=2)
    return data, all_subsets_with_intercept(2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(results.items(), key=lambda kv: int(kv[0].split()[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    passed = sum(ok for ok, _ in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
