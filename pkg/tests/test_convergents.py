"""Convergent tables: recurrences, gap enclosures, cylinder helpers.

Reference values are recomputed in-test with plain Fraction arithmetic
(independent of the table code path wherever the check matters).
"""

from fractions import Fraction

import pytest

from renormlab import (
    build_convergents,
    convergent,
    delta_intervals,
    parse_schedule,
    prefix_interval,
    prefix_pq,
    rho_enclosure,
)
from renormlab.errors import CertificationError


def eval_cf(quotients):
    """Finite continued fraction [0; k_1, k_2, ...] bottom-up."""
    value = Fraction(0)
    for k in reversed(quotients):
        value = 1 / (k + value)
    return value


def test_euclid_oracle_small_list():
    # the table keeps two extra internal rows past the export depth
    sched = parse_schedule("list:5,7,11,13")
    table = build_convergents(sched, 2)
    assert (table.p(1), table.q(1)) == (1, 5)
    assert (table.p(2), table.q(2)) == (7, 36)
    assert Fraction(table.p(2), table.q(2)) == eval_cf([5, 7])


def test_recurrence_matches_direct_computation():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 8)
    ks = [(n + 5) ** 2 for n in range(1, 9)]
    p = [1, 0]
    q = [0, 1]
    for k in ks:
        p.append(k * p[-1] + p[-2])
        q.append(k * q[-1] + q[-2])
    for n in range(-1, 9):
        assert table.p(n) == p[n + 1]
        assert table.q(n) == q[n + 1]


def test_convergent_helper_agrees_with_cf_evaluation():
    sched = parse_schedule("poly:(n+5)^2")
    ks = [(n + 5) ** 2 for n in range(1, 6)]
    assert convergent(sched, 5) == eval_cf(ks)


def test_partial_unit_identity_for_any_rho():
    # q_n * D_{n-1}(rho) + q_{n-1} * D_n(rho) = 1 identically in rho
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 6)
    for rho in (table.rho.mid, Fraction(1, 37), Fraction(2, 71)):
        for n in range(0, 7):
            d_prev = (-1) ** (n - 1) * (table.q(n - 1) * rho - table.p(n - 1))
            d_cur = (-1) ** n * (table.q(n) * rho - table.p(n))
            assert table.q(n) * d_prev + table.q(n - 1) * d_cur == 1


def test_gap_rows_bracket_true_gaps():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 7)
    # rows bracket the gap over the internal bracketing interval
    for n in range(-1, 8):
        row = table.delta(n)
        for r in (table.rho.lo, table.rho.mid, table.rho.hi):
            true_gap = (-1) ** n * (table.q(n) * r - table.p(n))
            assert row.lo <= true_gap <= row.hi
        assert row.lo > 0
        if 0 <= n < 7:  # certified export width guarantee
            assert row.width <= Fraction(1, table.q(n) * table.q(n + 1))


def test_rho_enclosures_nest_and_tighten():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 8)
    prev = None
    for level in range(1, 8):
        enc = rho_enclosure(table, level)
        assert enc.lo < enc.hi
        if prev is not None:
            assert prev.lo <= enc.lo and enc.hi <= prev.hi
            assert enc.hi - enc.lo < prev.hi - prev.lo
        prev = enc


def test_rho_enclosure_depth_guard():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 4)
    with pytest.raises(CertificationError):
        rho_enclosure(table, 4)


def test_prefix_pq_matches_recurrence():
    p_prev, q_prev, p_top, q_top = prefix_pq([36, 49])
    assert (p_prev, q_prev) == (1, 36)
    assert (p_top, q_top) == (49, 49 * 36 + 1)


def test_prefix_interval_contains_deep_value():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 8)
    deep = Fraction(table.p(8), table.q(8))
    for top in range(1, 6):
        cyl = prefix_interval([(n + 5) ** 2 for n in range(1, top + 1)])
        assert cyl.lo <= deep <= cyl.hi


def test_prefix_intervals_nest():
    hs = [36, 49, 64, 81]
    outer = prefix_interval(hs[:2])
    inner = prefix_interval(hs)
    assert outer.lo <= inner.lo and inner.hi <= outer.hi


def test_delta_intervals_match_table_rows():
    sched = parse_schedule("poly:(n+5)^2")
    table = build_convergents(sched, 6)
    heights = [(n + 5) ** 2 for n in range(1, 7)]
    gaps = delta_intervals(heights, 4)
    for n, gap in gaps.items():
        row = table.delta(n)
        assert gap.lo <= row.hi and row.lo <= gap.hi
