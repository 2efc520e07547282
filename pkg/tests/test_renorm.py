"""Renormalization pipeline: heights, teeth, partitions, chain addressing."""

from fractions import Fraction

import pytest

from renormlab import (
    build_partition,
    build_theta,
    chain_index,
    chain_midpoint,
    distinct_break_orbits,
    expected_teeth_backward,
    expected_teeth_forward,
    gamma_deviation_check,
    initial_pair,
    realize_chain,
    rigid_rotation,
    run_pipeline,
    sample_chains,
    verify_teeth,
)
from renormlab.errors import ConstructionError

EXPECTED_HEIGHTS = [36, 49, 64, 81, 100, 121]


def frac(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def test_rational_rotation_terminates():
    pairs, trace = run_pipeline(rigid_rotation(Fraction(3, 10)), depth=6)
    assert trace.heights() == [3, 3]
    assert trace.terminated and not trace.capped
    assert len(pairs) == 2  # the degenerate level is not kept


def test_default_heights_both_directions(default_pipelines):
    (_, trace_f), (_, trace_b) = default_pipelines
    assert trace_f.heights() == EXPECTED_HEIGHTS
    assert trace_b.heights() == EXPECTED_HEIGHTS
    assert not trace_f.terminated and not trace_f.capped


def test_initial_pair_geometry(default_lift):
    fwd = initial_pair(default_lift, Fraction(0), "forward")
    bwd = initial_pair(default_lift, Fraction(0), "backward")
    assert fwd.level == 0 and bwd.level == 0
    assert fwd.direction == "forward" and bwd.direction == "backward"
    assert fwd.fundamental_length() > 0
    assert bwd.fundamental_length() > 0


@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_teeth_match_closed_forms(default_pipelines, default_sol, default_tol, direction):
    (pairs_f, _), (pairs_b, _) = default_pipelines
    pairs = pairs_f if direction == "forward" else pairs_b
    expected = (
        expected_teeth_forward if direction == "forward" else expected_teeth_backward
    )
    for pair in pairs:
        exp_f, exp_g = expected(default_sol, pair.level)
        report = verify_teeth(
            pair, exp_f, exp_g, default_tol, err_floor=default_sol.err[pair.level]
        )
        assert report.all_pass, f"{direction} level {pair.level}"
        assert report.unmatched() == []
        for row in report.rows:
            assert row.computed.slope in (Fraction(2), Fraction(1, 2))
            assert row.computed.slope == row.expected.slope


def test_pair_lengths_track_d(default_pipelines, default_sol, default_tol):
    (_, _), (pairs_b, _) = default_pipelines
    for pair in pairs_b:
        gap = abs(pair.fundamental_length() - default_sol.d[pair.level])
        assert gap <= default_tol


def test_partition_tiles_circle(small_lift):
    part = build_partition(small_lift, Fraction(0), 2)
    assert len(part) == 56
    assert part.q_fine == 51 and part.q_coarse == 5
    assert len(part.of_kind(1)) == 51
    assert len(part.of_kind(2)) == 5
    assert part.total_length() == 1
    # invariant kind masses tile the circle exactly as well
    masses = part.deltas
    assert part.q_fine * masses[1] + part.q_coarse * masses[2] == 1


def test_partition_level_guard(small_lift):
    with pytest.raises(ConstructionError):
        build_partition(small_lift, Fraction(0), 0)


def test_chain_index_matches_inverse_orbit(default_lift, default_pipelines):
    """A chain's segment endpoint is the inverse orbit point of its index."""
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    for chain in [(0,), (3,), (0, 0), (2, 5), (1, 0, 4)]:
        idx = chain_index(chain, hs)
        x = Fraction(0)
        for _ in range(idx):
            x = default_lift.apply_inverse(x)
        seg = realize_chain(pairs_b, chain, hs)
        assert x in (frac(seg.lo), frac(seg.hi)), chain


def test_chain_coefficient_bounds(default_pipelines):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    with pytest.raises(ConstructionError):
        realize_chain(pairs_b, (hs[0] - 2,), hs)  # k - 2 is one past the cap
    realize_chain(pairs_b, (hs[0] - 3,), hs)  # the last allowed index


def test_theta_counts_and_measures(default_pipelines, default_sol, default_tol):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    theta = build_theta(pairs_b, 4, hs)
    counts = [lvl.count for lvl in theta.levels]
    assert counts == [34, 1598, 99076, 7827004, 767046392]
    for lvl in theta.levels:
        assert lvl.count == _chain_total(hs, lvl.level)
        assert lvl.measure == lvl.count * lvl.segment_length
        assert abs(lvl.segment_length - default_sol.d[lvl.level]) <= default_tol
    # the product rule connecting consecutive levels
    for prev, cur in zip(theta.levels, theta.levels[1:]):
        assert cur.count == (hs[cur.level] - 2) * prev.count


def test_sampled_chains_have_uniform_lengths(
    default_pipelines, default_sol, default_tol
):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    for level in range(3):
        chains = sample_chains(hs, level, 12, seed=7)
        assert len(chains) == min(12, _chain_total(hs, level))
        for chain in chains:
            seg = realize_chain(pairs_b, chain, hs)
            assert abs(seg.width - default_sol.d[level]) <= default_tol


def _chain_total(hs, level):
    total = 1
    for m in range(level + 1):
        total *= hs[m] - 2
    return total


def test_break_orbits_distinct_at_marked_interior_point(
    default_lift, default_pipelines, default_tol
):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    eta0 = chain_midpoint(pairs_b, (0, 0, 0), hs)
    pairs_m, _ = run_pipeline(default_lift, eta0, depth=4, direction="forward")
    verdict = distinct_break_orbits(pairs_m, Fraction(2), default_tol)
    assert verdict.all_distinct
    assert verdict.first_collision() is None
    for row in verdict.rows:
        assert row.break_count == 4 and row.sizes_ok
        assert row.min_gap is not None and row.min_gap > default_tol


def test_break_orbits_collide_for_rigid_rotation(default_tol):
    pairs, _ = run_pipeline(rigid_rotation(Fraction(3, 10)), depth=4)
    verdict = distinct_break_orbits(pairs, Fraction(2), default_tol)
    assert not verdict.all_distinct
    assert verdict.first_collision() == 0
    assert verdict.rows[0].break_count == 0


def test_gamma_families(default_pipelines, default_sol):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    for n, s in [(0, 1), (1, 1), (2, 1), (0, 2), (1, 2)]:
        chk = gamma_deviation_check(pairs_b, default_sol, n, s, hs)
        assert chk.ok, (n, s)
        if s == 1:
            assert chk.count == hs[n]
        else:
            assert chk.count == 1 + hs[n] * hs[n + 1]
    # odd level, one-step family: lengths are exactly uniform
    odd = gamma_deviation_check(pairs_b, default_sol, 1, 1, hs)
    assert odd.max_deviation == 0
