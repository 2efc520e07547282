"""Straightening map, derivative probes, density histograms, control runs."""

import random
from fractions import Fraction

import pytest

from renormlab import (
    ProbeConfig,
    birkhoff_mean,
    build_control_lift,
    build_f0,
    build_partition,
    build_theta,
    conjugacy_values,
    density_histogram,
    derivative_probe,
    parse_schedule,
    partition_stream,
    prefix_value,
    rho_enclosure,
    rigid_rotation,
    rotation_number_heights,
    run_pipeline,
    solve_schedule,
    tune_control_offset,
    write_conjugacy_csv,
)
from renormlab.errors import ConstructionError, ResourceError
from renormlab.rlog import exp_enclosure


# -------------------------------------------------------------------------
# rotation-number readout


def test_readout_complete(default_pipelines):
    (_, trace_f), _ = default_pipelines
    out = rotation_number_heights(trace_f)
    assert out.complete
    assert list(out.heights) == [36, 49, 64, 81, 100, 121]
    assert out.note == ""


def test_readout_rational():
    _, trace = run_pipeline(rigid_rotation(Fraction(3, 10)), depth=6)
    out = rotation_number_heights(trace)
    assert not out.complete
    assert out.note == "rational rotation number"
    assert list(out.heights) == [3, 3]


def test_readout_capped(default_lift):
    _, trace = run_pipeline(default_lift, Fraction(0), depth=6, height_cap=40)
    out = rotation_number_heights(trace)
    assert not out.complete
    assert list(out.heights) == [36]
    assert "cap" in out.note or "40" in out.note


# -------------------------------------------------------------------------
# Birkhoff means and straightening values


def test_birkhoff_mean_exact_for_rotation():
    lift = rigid_rotation(Fraction(3, 10))
    assert birkhoff_mean(lift, Fraction(1, 7), 4) == Fraction(3, 10)
    with pytest.raises(ConstructionError):
        birkhoff_mean(lift, Fraction(0), 0)


def test_birkhoff_mean_near_rotation_number(default_lift, default_table):
    enc = rho_enclosure(default_table, 4)
    mean = birkhoff_mean(default_lift, Fraction(1, 7), 1765)
    assert abs(mean - enc.mid) < Fraction(1, 1765)


def test_conjugacy_values_additive(small_lift, small_instance):
    table = small_instance[1]
    part = build_partition(small_lift, Fraction(0), 2)
    enc = rho_enclosure(table, 6)
    values = conjugacy_values(part, enc)
    total = part.q_fine + part.q_coarse
    assert set(values) == set(range(total))
    assert values[0].lo == 0 and values[0].hi == 0
    width = enc.width
    rng = random.Random(5)
    for _ in range(40):
        i = rng.randrange(1, total)
        j = rng.randrange(1, total - i) if total - i > 1 else 1
        if i + j >= total:
            continue
        assert values[i].width == i * width
        s = values[i].mid + values[j].mid - values[i + j].mid
        dist = abs(s - round(s))
        slack = values[i].width + values[j].width + values[i + j].width
        assert dist <= slack + 0  # exact integers up to enclosure widths


def test_conjugacy_csv(tmp_path, small_lift, small_instance):
    part = build_partition(small_lift, Fraction(0), 2)
    values = conjugacy_values(part, rho_enclosure(small_instance[1], 6))
    path = tmp_path / "phi.csv"
    write_conjugacy_csv(str(path), part, values)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,phi_lo,phi_hi,phi_decimal"
    assert len(lines) == 1 + part.q_fine + part.q_coarse


# -------------------------------------------------------------------------
# derivative probes


def test_probe_config_validation():
    with pytest.raises(ConstructionError):
        ProbeConfig((), 3, 5)
    with pytest.raises(ConstructionError):
        ProbeConfig((0,), 5, 3)
    with pytest.raises(ConstructionError):
        ProbeConfig((0,), 3, 5, cases=(4,))
    with pytest.raises(ConstructionError):
        ProbeConfig((0,), 3, 5, samples=0)
    assert ProbeConfig((0, 0), 3, 6).required_depth == 9


@pytest.fixture(scope="module")
def probe_report(default_sol, default_lift, default_pipelines):
    (_, _), (pairs_b, trace_b) = default_pipelines
    hs = trace_b.heights()
    theta = build_theta(pairs_b, 4, hs)
    cfg = ProbeConfig((0, 0, 0, 0), 3, 6)
    return derivative_probe(cfg, theta, default_sol, default_lift)


def test_probe_example_passes(probe_report):
    assert probe_report.all_pass
    assert len(probe_report.rows) == 4 * 3 * 2 * 2  # levels x cases x samples x ends
    assert {r.case for r in probe_report.rows} == {1, 2, 3}


def test_probe_medians_decrease(probe_report):
    assert probe_report.medians_decreasing
    m = probe_report.medians
    assert Fraction(95, 10**8) < m[3] < Fraction(98, 10**8)
    assert m[6] < Fraction(2, 10**7)


def test_probe_budgets_shrink(probe_report):
    b = probe_report.budgets
    assert all(v > 0 for v in b.values())
    assert b[6] < b[3]  # deeper levels certify a tighter window overall


def test_probe_rows_sound(probe_report):
    alpha = probe_report.alpha
    for row in probe_report.rows:
        assert row.verdict == "pass"
        up = exp_enclosure(row.budget)
        dn = exp_enclosure(-row.budget)
        assert row.quotient.hi <= alpha.lo * up.lo
        assert row.quotient.lo >= alpha.hi * dn.hi
        assert row.log_dev.lo <= row.log_dev.hi
        assert max(abs(row.log_dev.lo), abs(row.log_dev.hi)) <= row.budget


def test_probe_csv(tmp_path, probe_report):
    path = tmp_path / "probes.csv"
    probe_report.write_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + len(probe_report.rows)
    assert lines[0].startswith("level,case,j0,j1,endpoint")


def test_probe_near_unit_slope_when_breaks_degenerate():
    """Shrinking the break size toward 1 drives every quotient toward 1."""
    a = Fraction(10**9 + 1, 10**9)
    sched = parse_schedule("poly:(n+5)^2")
    _, sol = solve_schedule(sched, a, depth=8, iterations=20, guard_bits=128)
    assert sol.alpha - 1 < Fraction(1, 10**10)
    lift = build_f0(sol)
    pairs_b, trace_b = run_pipeline(lift, Fraction(0), depth=4, direction="backward")
    hs = trace_b.heights()
    theta = build_theta(pairs_b, 3, hs)
    report = derivative_probe(ProbeConfig((0, 0, 0), 2, 3), theta, sol, lift)
    assert report.all_pass
    worst = max(
        max(abs(r.quotient.lo - 1), abs(r.quotient.hi - 1)) for r in report.rows
    )
    assert worst < Fraction(1, 10**6)


# -------------------------------------------------------------------------
# density histograms


def test_stream_matches_materialized_partition(small_lift):
    part = build_partition(small_lift, Fraction(0), 2)
    stream = partition_stream(small_lift, Fraction(0), 2)
    assert len(stream) == len(part) == 56
    assert stream.deltas == part.deltas
    by_key = {(e.index, e.kind): e.arc for e in part}
    seen = set()
    for e in stream:
        key = (e.index, e.kind)
        assert by_key[key].start == e.arc.start
        assert by_key[key].length == e.arc.length
        seen.add(key)
    assert len(seen) == 56


def test_histogram_conserves_mass(small_lift):
    stream = partition_stream(small_lift, Fraction(0), 3)
    hist = density_histogram(stream, 16)
    assert sum(hist.masses) == 1
    assert hist.bins == 16 and hist.arc_count == 923
    assert 0 < hist.min_max_ratio <= 1
    assert hist.bin_edges[0] == 0 and hist.bin_edges[-1] == 1


def test_histogram_refinement_consistency(small_lift):
    s3 = partition_stream(small_lift, Fraction(0), 3)
    s4 = partition_stream(small_lift, Fraction(0), 4)
    h3 = density_histogram(s3, 16)
    h4 = density_histogram(s4, 16)
    # refining the partition moves per-bin mass only through boundary arcs
    bound = 4 * max(s3.deltas.values())
    for m3, m4 in zip(h3.masses, h4.masses):
        assert abs(m4 - m3) <= bound


def test_histogram_null_for_rigid_rotation():
    rot = rigid_rotation(prefix_value((5, 10, 17, 26, 37)))
    stream = partition_stream(rot, Fraction(0), 3)
    hist = density_histogram(stream, 64)
    assert hist.arc_count == 923
    assert hist.min_max_ratio > Fraction(99, 100)


def test_histogram_preconditions(small_lift):
    with pytest.raises(ResourceError):
        partition_stream(small_lift, Fraction(0), 3, cap=100)
    stream = partition_stream(small_lift, Fraction(0), 2)
    with pytest.raises(ResourceError):
        density_histogram(stream, 6)  # 56 arcs cannot resolve 6 bins
    with pytest.raises(ConstructionError):
        density_histogram(stream, 0)


# -------------------------------------------------------------------------
# singular one-tooth control


def test_control_lift_validation():
    with pytest.raises(ConstructionError):
        build_control_lift(Fraction(2), Fraction(1, 2), tooth_at=Fraction(1, 3))
    with pytest.raises(ConstructionError):
        build_control_lift(Fraction(2), Fraction(0))
    lift = build_control_lift(Fraction(2), Fraction(1, 2))
    sizes = sorted(b.size for b in lift.breaks())
    assert sizes == [Fraction(1, 2), Fraction(1, 2), Fraction(4)]


def test_tuned_control_matches_prefix():
    prefix = (5, 10, 17)
    tuning = tune_control_offset(Fraction(2), prefix)
    assert tuning.heights[: len(prefix)] == prefix
    lift = build_control_lift(Fraction(2), tuning.offset)
    _, trace = run_pipeline(lift, Fraction(0), depth=3)
    assert trace.heights() == list(prefix)
    assert tuning.offset.denominator & (tuning.offset.denominator - 1) == 0
