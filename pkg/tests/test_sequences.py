"""Normalized-length solver: recurrences, enclosures, inequality report."""

from fractions import Fraction

import pytest

from renormlab import (
    SolverConfig,
    TailPolicy,
    parse_schedule,
    solve_fixed_point,
    solve_schedule,
    verify_inequalities,
)
from renormlab.errors import ScheduleError
from renormlab.sequences import alpha


def test_solution_window_and_keys(default_sol):
    sol = default_sol
    assert sorted(sol.d) == list(range(-1, 11))
    assert sorted(sol.delta) == [0, 2, 4, 6, 8, 10]
    assert sol.meta.depth == 10


def test_lengths_positive_and_strictly_decreasing(default_sol):
    sol = default_sol
    for n in range(-1, 10):
        assert sol.d[n] > sol.d[n + 1] > 0
    for m in range(0, 9, 2):
        assert sol.delta[m] > sol.delta[m + 2] > 0


def test_normalization_at_base_level(default_sol):
    # the level normalization pins d_{-1} up to the solver error
    sol = default_sol
    assert abs(sol.d[-1] - 1) <= sol.err[-1] or sol.d[-1] == 1


def test_recurrence_residuals_within_budget(default_sol):
    sol = default_sol
    report = sol.residual_report()
    budget = 2 * max(sol.err.values())
    assert report["even"] <= budget
    assert report["odd"] <= budget
    assert report["delta"] <= budget


def test_gap_recurrence_direct(default_sol):
    # delta_m = d_{m+2} + a * delta_{m+4} for even m
    sol = default_sol
    a = sol.a
    for m in (0, 2, 4, 6):
        res = abs(sol.delta[m] - (sol.d[m + 2] + a * sol.delta[m + 4]))
        assert res <= 2 * max(sol.err.values())


def test_alpha_window(default_sol):
    value, err = alpha(default_sol)
    assert value == default_sol.alpha
    assert err == default_sol.alpha_err
    assert 1 < value < value + err < Fraction(11, 10)


def test_deeper_solve_stays_inside_alpha_window(default_instance):
    sched, _, sol10 = default_instance
    _, sol8 = solve_schedule(sched, 2, depth=8, iterations=20, guard_bits=128)
    assert sol8.alpha <= sol10.alpha <= sol8.alpha + sol8.alpha_err


def test_solver_is_deterministic(default_instance):
    sched, table, sol = default_instance
    cfg = SolverConfig(
        a=Fraction(2), depth=10, iterations=20, tail=TailPolicy(guard_bits=128)
    )
    again = solve_fixed_point(cfg, table)
    assert again.alpha == sol.alpha
    assert again.d == sol.d


def test_inequality_report_all_pass(default_instance):
    _, table, sol = default_instance
    report = verify_inequalities(sol, table)
    assert report.all_pass
    names = {r.name for r in report.rows}
    assert "log_ratio_lower" in names and "log_ratio_upper" in names
    for row in report.rows:
        assert row.verdict == "pass"
        assert row.slack > 0


def test_inequality_report_rejects_foreign_table(default_instance, small_instance):
    _, _, sol = default_instance
    _, small_table, _ = small_instance
    with pytest.raises(Exception):
        verify_inequalities(sol, small_table)


def test_solver_config_validation():
    with pytest.raises(ScheduleError):
        SolverConfig(a=Fraction(1), depth=10, iterations=20)
    with pytest.raises(ScheduleError):
        SolverConfig(a=Fraction(2), depth=3, iterations=20)
    with pytest.raises(ScheduleError):
        SolverConfig(a=Fraction(2), depth=10, iterations=0)


def test_error_column_is_tiny_at_default_guard(default_sol):
    # the per-level certificates are far below the acceptance tolerance
    sol = default_sol
    assert max(sol.err.values()) < Fraction(1, 10**100)
    assert all(e >= 0 for e in sol.err.values())


def test_d_interval_contains_value(default_sol):
    sol = default_sol
    for n in (-1, 0, 3, 10):
        iv = sol.d_interval(n)
        assert iv.lo <= sol.d[n] <= iv.hi
