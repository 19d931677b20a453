"""Shared fixtures: benchmark parameter sets and pre-solved grids.

The two reference solves are session-scoped because every consumer treats
them as read-only; re-solving per test would dominate the suite runtime.
"""

from __future__ import annotations

import numpy as np
import pytest

import ruinopt as ro


@pytest.fixture(scope="session")
def ex1():
    return ro.example1_params()


@pytest.fixture(scope="session")
def ex2():
    return ro.example2_params()


@pytest.fixture(scope="session")
def exp1():
    return ro.make_exponential(1.0)


@pytest.fixture(scope="session")
def k1(ex1):
    return ro.derive_constants(ex1, claim_mean=1.0)


@pytest.fixture(scope="session")
def k2(ex2):
    return ro.derive_constants(ex2, claim_mean=2.0)


@pytest.fixture(scope="session")
def grid40():
    return ro.Grid.from_xmax(5e-3, 40.0)


@pytest.fixture(scope="session")
def vg40(ex1, exp1, grid40):
    """Benchmark 1 unconstrained solve on the reporting grid."""
    return ro.solve_v_unconstrained(ex1, exp1, grid40)


@pytest.fixture(scope="session")
def st40(vg40, ex1):
    return ro.extract_strategy_unconstrained(vg40, ex1)


@pytest.fixture(scope="session")
def vgc1(ex1, exp1):
    """Benchmark 1 constrained solve, cap 1, shorter grid."""
    grid = ro.Grid.from_xmax(5e-3, 10.0)
    return ro.solve_v_constrained(ex1, exp1, grid, cap=1.0)


def _acceptance_lines(config) -> list[str]:
    lines = getattr(config, "_acceptance_lines", None)
    if lines is None:
        lines = []
        config._acceptance_lines = lines
    return lines


@pytest.fixture(scope="session")
def acceptance(request):
    """Collector for the per-criterion verdict lines.

    record(n, ok, detail) stores the line for the end-of-run summary and
    returns ok so the caller can assert on it; the line is emitted whether
    or not the assertion passes.
    """
    lines = _acceptance_lines(request.config)

    def record(n: int, ok: bool, detail: str) -> bool:
        lines.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def assert_close(actual, expected, rtol, label=""):
    """Scalar closeness with a diagnostic that shows both values."""
    actual = float(actual)
    expected = float(expected)
    err = abs(actual - expected) / max(abs(expected), 1e-300)
    assert err <= rtol, f"{label}: {actual!r} vs {expected!r} (rel {err:.3e} > {rtol:.1e})"


def max_rel_dev(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
