"""Shared fixtures: the two reference instances are solved once per session."""

from __future__ import annotations

from fractions import Fraction

import pytest

from renormlab import build_f0, parse_schedule, run_pipeline, solve_schedule


@pytest.fixture(scope="session")
def default_instance():
    """Quadratic schedule k_n = (n+5)^2, a = 2, full defaults."""
    sched = parse_schedule("poly:(n+5)^2")
    table, sol = solve_schedule(sched, 2, depth=10, iterations=20, guard_bits=128)
    return sched, table, sol


@pytest.fixture(scope="session")
def default_sol(default_instance):
    return default_instance[2]


@pytest.fixture(scope="session")
def default_table(default_instance):
    return default_instance[1]


@pytest.fixture(scope="session")
def default_lift(default_sol):
    return build_f0(default_sol)


@pytest.fixture(scope="session")
def default_pipelines(default_lift):
    """Forward and backward pipelines at the marked break point, depth 6."""
    fwd = run_pipeline(default_lift, Fraction(0), depth=6, direction="forward")
    bwd = run_pipeline(default_lift, Fraction(0), depth=6, direction="backward")
    return fwd, bwd


@pytest.fixture(scope="session")
def small_instance():
    """Quadratic schedule k_n = n^2 + 2n + 2, a = 2: partition sizes stay
    small enough for deep histograms."""
    sched = parse_schedule("poly:2,2,1")
    table, sol = solve_schedule(sched, 2, depth=10, iterations=20, guard_bits=128)
    return sched, table, sol


@pytest.fixture(scope="session")
def small_sol(small_instance):
    return small_instance[2]


@pytest.fixture(scope="session")
def small_lift(small_sol):
    return build_f0(small_sol)


@pytest.fixture(scope="session")
def default_tol(default_sol):
    return Fraction(8) * max(default_sol.err.values())


@pytest.fixture(scope="session")
def small_tol(small_sol):
    return Fraction(8) * max(small_sol.err.values())
