"""Partial-quotient schedules: parsing, evaluation, hypothesis gates."""

from fractions import Fraction

import pytest

from renormlab import (
    QuotientSchedule,
    evaluate_schedule,
    k_floor,
    parse_schedule,
    validate_hypotheses,
)
from renormlab.errors import ScheduleError


def test_parse_binomial_square():
    sched = parse_schedule("poly:(n+5)^2")
    assert sched.kind == "poly"
    assert sched.coeffs == (25, 10, 1)
    assert [evaluate_schedule(sched, n) for n in range(1, 7)] == [
        36, 49, 64, 81, 100, 121,
    ]


def test_parse_coefficient_list_polynomial():
    sched = parse_schedule("poly:2,2,1")
    # ascending powers: 2 + 2n + n^2
    assert [evaluate_schedule(sched, n) for n in range(1, 6)] == [5, 10, 17, 26, 37]


def test_parse_explicit_list():
    sched = parse_schedule("list:5,7,11")
    assert sched.kind == "list"
    assert evaluate_schedule(sched, 2) == 7
    assert sched.max_depth == 3


def test_parse_rejects_garbage():
    with pytest.raises(ScheduleError):
        parse_schedule("poly:")
    with pytest.raises(ScheduleError):
        parse_schedule("spline:1,2")
    with pytest.raises(ScheduleError):
        parse_schedule("list:")


def test_label_round_trip():
    sched = parse_schedule("poly:(n+5)^2")
    again = parse_schedule(sched.label)
    assert again.coeffs == sched.coeffs


def test_k_floor_is_first_value_for_increasing_schedules():
    sched = parse_schedule("poly:(n+5)^2")
    assert k_floor(sched, 1) == 36
    assert k_floor(sched, 3) == 64


def test_defaults_pass_all_hypotheses():
    report = validate_hypotheses(parse_schedule("poly:(n+5)^2"), 2)
    assert report.passed
    assert report.failed_names() == ()


def test_small_first_quotient_fails():
    # k_n = n + 2 starts at k_1 = 3
    report = validate_hypotheses(parse_schedule("poly:2,1"), 2)
    assert not report.passed
    assert "k1_at_least_5" in report.failed_names()


def test_linear_growth_fails_series_gate():
    # k_n = n + 4: first value is fine, the reciprocal series diverges
    report = validate_hypotheses(parse_schedule("poly:4,1"), 2)
    assert not report.passed
    assert "reciprocal_series_converges" in report.failed_names()
    assert "k1_at_least_5" not in report.failed_names()


def test_slope_gate_scales_with_a():
    # k_1 = 36 < 2a for a = 20
    report = validate_hypotheses(parse_schedule("poly:(n+5)^2"), 20)
    assert not report.passed
    assert "k1_at_least_2a" in report.failed_names()


def test_non_monotone_list_fails():
    report = validate_hypotheses(parse_schedule("list:7,6,9"), 2)
    assert not report.passed
    assert "strictly_increasing" in report.failed_names()


def test_schedule_dataclass_validation():
    with pytest.raises(ScheduleError):
        QuotientSchedule(kind="poly", coeffs=())
    with pytest.raises(ScheduleError):
        QuotientSchedule(kind="other", coeffs=(1,))
