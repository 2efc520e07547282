"""Conjugacy experiments on the certified map.

Four instruments share this module. Rotation-number readout turns a
renormalization trace into a partial-quotient prefix and cross-checks it
against a Birkhoff average. Conjugacy values assign to every partition
endpoint its image under the straightening map (an exact multiple of the
rotation-number enclosure). Derivative probes measure difference
quotients of the straightening map at an interior surviving point and
compare them against the certified derivative with a per-case error
budget. Density histograms push the invariant measure onto bins, with an
adjacent one-tooth control map whose histogram must degenerate with
depth while the main map's stays put.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .convergents import RhoEnclosure, delta_intervals, prefix_interval, prefix_pq
from .errors import (
    CertificationError,
    ConstructionError,
    ResourceError,
    ScheduleError,
)
from .plmaps import CircleLift, build_f0, evaluate, from_nodes
from .rational import RatInterval, format_rat, hull, rat_to_decimal
from .renorm import (
    CommutingPair,
    DynamicalPartition,
    PartitionArc,
    RenormTrace,
    ThetaLevels,
    _arc_masses,
    chain_midpoint,
    circle_arc_between,
    gamma_deviation_check,
    run_pipeline,
)
from .rlog import exp_enclosure, log_quotient_enclosure
from .sequences import SequenceSolution


# --------------------------------------------------------------------------
# rotation number readout


@dataclass(frozen=True)
class HeightsReadout:
    heights: tuple[int, ...]
    complete: bool  # False when the trace stopped early (cap or rational)
    note: str = ""

    def to_json(self) -> dict:
        return {
            "heights": list(self.heights),
            "complete": self.complete,
            "note": self.note,
        }


def rotation_number_heights(trace: RenormTrace) -> HeightsReadout:
    """Partial-quotient prefix certified by a renormalization trace."""
    hs = tuple(trace.heights())
    if trace.capped:
        return HeightsReadout(hs, False, trace.cap_note or "resource cap")
    if trace.terminated:
        return HeightsReadout(hs, False, "rational rotation number")
    return HeightsReadout(hs, True)


def birkhoff_mean(lift: CircleLift, start: Fraction, steps: int) -> Fraction:
    """Average displacement of the unwrapped orbit over `steps` iterates.

    Lies within 1/steps of the rotation number for any start point; taking
    steps = q_M puts it inside the level-M convergent enclosure.
    """
    if steps < 1:
        raise ConstructionError("Birkhoff average needs at least one step")
    x = Fraction(start)
    for _ in range(steps):
        x = lift.lift_value(x)
    return (x - start) / steps


# --------------------------------------------------------------------------
# conjugacy values on partition endpoints


def conjugacy_values(
    partition: DynamicalPartition, rho: RhoEnclosure
) -> dict[int, RatInterval]:
    """Straightening-map enclosures at the orbit points of a partition.

    Endpoint i of the partition is the i-th forward image of the marked
    point, and the straightening map sends it to i*rho mod 1. The returned
    enclosures are reduced by the integer part of the midpoint, so an
    interval can poke slightly past [0, 1) but never by more than its own
    width.
    """
    total = partition.q_fine + partition.q_coarse
    out: dict[int, RatInterval] = {}
    for i in range(total):
        lo, hi = rho.lo * i, rho.hi * i
        shift = (lo + hi) / 2
        whole = shift.numerator // shift.denominator
        out[i] = RatInterval(lo - whole, hi - whole)
    return out


def write_conjugacy_csv(
    path: str, partition: DynamicalPartition, values: dict[int, RatInterval]
) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "phi_lo", "phi_hi", "phi_decimal"])
        for i in sorted(values):
            v = values[i]
            writer.writerow(
                [i, format_rat(v.lo), format_rat(v.hi), rat_to_decimal(v.mid, 30)]
            )


# --------------------------------------------------------------------------
# derivative probes


@dataclass(frozen=True)
class ProbeConfig:
    """One probe run: a surviving-point address plus a level sweep."""

    theta_chain: tuple[int, ...]
    n_lo: int
    n_hi: int
    cases: tuple[int, ...] = (1, 2, 3)
    samples: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.theta_chain:
            raise ConstructionError("probe needs a nonempty chain")
        if not 0 <= self.n_lo <= self.n_hi:
            raise ConstructionError("probe level range is empty or negative")
        if not self.cases or any(c not in (1, 2, 3) for c in self.cases):
            raise ConstructionError("cases must be a nonempty subset of 1..3")
        if self.samples < 1:
            raise ConstructionError("samples per level must be >= 1")

    @property
    def required_depth(self) -> int:
        # Case 3 reads two levels past n_hi and budgets one more
        return self.n_hi + 3


@dataclass(frozen=True)
class ProbeRow:
    level: int
    case: int
    j0: int
    j1: int
    endpoint: str  # "near" | "far"
    eta_len: Fraction
    phi_len: RatInterval
    quotient: RatInterval
    log_dev: RatInterval  # enclosure of log(quotient / alpha)
    budget: Fraction
    verdict: str  # "pass" | "fail" | "indeterminate"


@dataclass(frozen=True)
class ProbeReport:
    eta0: Fraction
    alpha: RatInterval
    rows: tuple[ProbeRow, ...]
    budgets: dict[int, Fraction] = field(default_factory=dict)
    medians: dict[int, Fraction] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)

    @property
    def medians_decreasing(self) -> bool:
        levels = sorted(self.medians)
        vals = [self.medians[n] for n in levels]
        return all(u > v for u, v in zip(vals, vals[1:]))

    def rows_at(self, level: int) -> list[ProbeRow]:
        return [r for r in self.rows if r.level == level]

    def write_csv(self, path: str) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "level",
                    "case",
                    "j0",
                    "j1",
                    "endpoint",
                    "eta_len",
                    "quotient_lo",
                    "quotient_hi",
                    "quotient_decimal",
                    "log_dev_lo",
                    "log_dev_hi",
                    "budget",
                    "verdict",
                ]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.level,
                        r.case,
                        r.j0,
                        r.j1,
                        r.endpoint,
                        format_rat(r.eta_len),
                        format_rat(r.quotient.lo),
                        format_rat(r.quotient.hi),
                        rat_to_decimal(r.quotient.mid, 30),
                        rat_to_decimal(r.log_dev.lo, 30),
                        rat_to_decimal(r.log_dev.hi, 30),
                        rat_to_decimal(r.budget, 30),
                        r.verdict,
                    ]
                )


def _probe_segment(
    pairs: list[CommutingPair],
    heights: list[int],
    n: int,
    case: int,
    j0: int,
    j1: int,
) -> RatInterval:
    """Exact probe segment adjacent to the marked point, by endpoint orbits.

    Cases 1 and 3 address a one-level-finer segment reached through the
    level-(n+1) pair and then pushed across the fundamental segment by the
    level-n pair; case 2 addresses the two-level-finer fundamental segment
    pushed the same way. Setting j0 = 0 in the case-1 chain is exactly
    case 3.
    """
    if case in (1, 3):
        seg = hull(Fraction(0), pairs[n + 1].f_at_zero())
        seg = RatInterval(
            evaluate(pairs[n + 1].g, seg.lo), evaluate(pairs[n + 1].g, seg.hi)
        )
        for _ in range(j1):
            seg = RatInterval(
                evaluate(pairs[n + 1].f, seg.lo), evaluate(pairs[n + 1].f, seg.hi)
            )
    elif case == 2:
        seg = hull(Fraction(0), pairs[n + 2].f_at_zero())
    else:
        raise ConstructionError("case must be 1, 2, or 3")
    seg = RatInterval(evaluate(pairs[n].g, seg.lo), evaluate(pairs[n].g, seg.hi))
    for _ in range(heights[n] - 1 - j0):
        seg = RatInterval(evaluate(pairs[n].f, seg.lo), evaluate(pairs[n].f, seg.hi))
    return seg


def _phi_sums(
    case: int,
    n: int,
    j0: int,
    j1: int,
    heights: list[int],
    gaps: dict[int, RatInterval],
) -> tuple[RatInterval, RatInterval]:
    """(near, far) straightened distances for a probe segment's endpoints.

    At an endpoint the arc back to the marked point tiles exactly into
    partition segments, and the straightening map sends each level-m tile
    to an arc of length gap_m; the sums are exact integer combinations.
    """
    if case == 1:
        near = gaps[n] * j0 + gaps[n + 1] * (j1 + 1)
        far = near + gaps[n + 1]
    elif case == 2:
        near = gaps[n] * j0 + gaps[n + 1] * (heights[n + 1] + 1)
        far = gaps[n] * (j0 + 1) + gaps[n + 1]
    else:
        near = gaps[n + 1] * (j1 + 1)
        far = gaps[n + 1] * (j1 + 2)
    return near, far


def probe_budgets(
    pairs: list[CommutingPair],
    sol: SequenceSolution,
    heights: list[int],
    n: int,
) -> dict[int, Fraction]:
    """Per-case budget for |log(quotient/alpha)| at probe level n.

    The shared part bounds, over the two segment families the tilings
    draw from, the length deviation relative to the certified fixed-point
    value plus the certified gap between that value and the straightened
    length. The case term is the tail of the tiling sum the probe cannot
    see.
    """
    a = sol.a
    eps = Fraction(0)
    for s in (1, 2):
        chk = gamma_deviation_check(pairs, sol, n, s, heights)
        lv = n + s - 1
        d_lv = pairs[lv].fundamental_length()
        t_bound = Fraction(2) * (a - 1) / heights[lv + 1]
        eps = max(eps, chk.max_deviation / d_lv + t_bound)
    k2 = heights[n + 1]
    k3 = heights[n + 2]
    return {
        1: eps + Fraction(1, k2),
        2: eps + Fraction(1, k2 * k3),
        3: eps + a * a / k2 + Fraction(1, k3),
    }


def derivative_probe(
    cfg: ProbeConfig,
    theta: ThetaLevels,
    sol: SequenceSolution,
    lift: CircleLift | None = None,
    max_bits: int | None = None,
    height_cap: int | None = None,
) -> ProbeReport:
    """Difference quotients of the straightening map at a surviving point.

    The probe point is the exact midpoint of the chain's segment. Probes
    are taken at partition endpoints adjacent to it, where both sides of
    the quotient are exact: the point-side distance is a rational length
    read off the realized segment, the straightened side is an integer
    combination of gap enclosures. Each quotient must sit inside
    alpha * exp(+-budget) for its case's budget.
    """
    if lift is None:
        lift = build_f0(sol)
    pipe_kwargs: dict = {"max_bits": max_bits}
    if height_cap is not None:
        pipe_kwargs["height_cap"] = height_cap
    bpairs, btrace = run_pipeline(
        lift,
        Fraction(0),
        depth=len(cfg.theta_chain),
        direction="backward",
        **pipe_kwargs,
    )
    bh = btrace.heights()
    m = len(cfg.theta_chain)
    if len(bh) < m:
        raise CertificationError("backward pipeline too shallow for the chain")
    if list(theta.heights)[:m] != bh[:m]:
        raise CertificationError("surviving-set heights disagree with pipeline")
    eta0 = chain_midpoint(bpairs, cfg.theta_chain, bh)

    depth = cfg.required_depth
    mpairs, mtrace = run_pipeline(
        lift, eta0, depth=depth, direction="forward", **pipe_kwargs
    )
    hs = mtrace.heights()
    if len(hs) < depth:
        raise CertificationError(
            f"probe needs {depth} certified levels, pipeline gave {len(hs)}"
        )
    gaps = delta_intervals(hs, cfg.n_hi + 1)
    alpha_iv = RatInterval(sol.alpha, sol.alpha + sol.alpha_err)

    rng = random.Random(cfg.seed)
    rows: list[ProbeRow] = []
    budgets: dict[int, Fraction] = {}
    medians: dict[int, Fraction] = {}
    for n in range(cfg.n_lo, cfg.n_hi + 1):
        case_budget = probe_budgets(mpairs, sol, hs, n)
        budgets[n] = case_budget[1]
        level_stats: list[Fraction] = []
        for case in cfg.cases:
            for _ in range(cfg.samples):
                if case == 1:
                    j0 = rng.randrange(1, hs[n])
                    j1 = rng.randrange(hs[n + 1])
                elif case == 2:
                    j0 = rng.randrange(hs[n])
                    j1 = 0
                else:
                    j0 = 0
                    j1 = rng.randrange(hs[n + 1])
                seg = _probe_segment(mpairs, hs, n, case, j0, j1)
                near_len = min(abs(seg.lo), abs(seg.hi))
                far_len = max(abs(seg.lo), abs(seg.hi))
                if near_len <= 0:
                    raise CertificationError("probe segment touched the point")
                near_phi, far_phi = _phi_sums(case, n, j0, j1, hs, gaps)
                B = case_budget[case]
                e_pos = exp_enclosure(B)
                e_neg = exp_enclosure(-B)
                for tag, e_len, phi in (
                    ("near", near_len, near_phi),
                    ("far", far_len, far_phi),
                ):
                    quot = RatInterval(phi.lo / e_len, phi.hi / e_len)
                    ldev = log_quotient_enclosure(quot, alpha_iv)
                    # convergence statistic against the delivered point value;
                    # the verdict below still uses the full interval
                    lpt = log_quotient_enclosure(
                        quot, RatInterval.point(sol.alpha)
                    )
                    if (
                        quot.hi <= alpha_iv.lo * e_pos.lo
                        and quot.lo >= alpha_iv.hi * e_neg.hi
                    ):
                        verdict = "pass"
                    elif (
                        quot.lo > alpha_iv.hi * e_pos.hi
                        or quot.hi < alpha_iv.lo * e_neg.lo
                    ):
                        verdict = "fail"
                    else:
                        verdict = "indeterminate"
                    level_stats.append(abs((lpt.lo + lpt.hi) / 2))
                    rows.append(
                        ProbeRow(
                            level=n,
                            case=case,
                            j0=j0,
                            j1=j1,
                            endpoint=tag,
                            eta_len=e_len,
                            phi_len=phi,
                            quotient=quot,
                            log_dev=ldev,
                            budget=B,
                            verdict=verdict,
                        )
                    )
        level_stats.sort()
        m = len(level_stats)
        medians[n] = (
            level_stats[m // 2]
            if m % 2 == 1
            else (level_stats[m // 2 - 1] + level_stats[m // 2]) / 2
        )
    return ProbeReport(
        eta0=eta0, alpha=alpha_iv, rows=tuple(rows), budgets=budgets, medians=medians
    )


# --------------------------------------------------------------------------
# density histograms


@dataclass(frozen=True)
class DensityHistogram:
    level: int
    bin_edges: tuple[Fraction, ...]
    masses: tuple[Fraction, ...]
    min_max_ratio: Fraction
    arc_count: int

    @property
    def bins(self) -> int:
        return len(self.masses)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "bins": self.bins,
            "min_max_ratio": format_rat(self.min_max_ratio),
            "min_max_ratio_decimal": rat_to_decimal(self.min_max_ratio, 12),
            "arc_count": self.arc_count,
        }

    def write_csv(self, path: str) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin", "edge_lo", "edge_hi", "mass", "lebesgue_ratio"])
            nbins = self.bins
            for j, mass in enumerate(self.masses):
                writer.writerow(
                    [
                        j,
                        format_rat(self.bin_edges[j]),
                        format_rat(self.bin_edges[j + 1]),
                        format_rat(mass),
                        rat_to_decimal(mass * nbins, 12),
                    ]
                )


class PartitionStream:
    """Partition arcs produced lazily from a single orbit sweep.

    Covers the same arcs as the materialized builder but holds only a
    rolling window of orbit points, so deep levels stay within memory.
    Per-kind invariant-measure arc masses ride along so histogram
    builders need no second pass.
    """

    def __init__(
        self,
        lift: CircleLift,
        marked: Fraction,
        level: int,
        qs: tuple[int, int],
        deltas: dict[int, Fraction],
    ) -> None:
        if level < 1:
            raise ConstructionError("partition level must be >= 1")
        self.lift = lift
        self.marked = Fraction(marked)
        self.level = level
        self.q_fine, self.q_coarse = qs
        self.deltas = dict(deltas)

    def __len__(self) -> int:
        return self.q_fine + self.q_coarse

    def __iter__(self):
        n = self.level
        q_n, q_n1 = self.q_fine, self.q_coarse
        total = q_n + q_n1
        prefix: list[Fraction] = []  # first q_{n-1} points, for the coarse arcs
        ring: list[Fraction | None] = [None] * q_n1
        x = self.marked
        for i in range(total):
            if i < q_n1:
                prefix.append(x)
            old = ring[i % q_n1]
            if old is not None:
                j = i - q_n1  # arc of kind n-1 at index j, j < q_n
                if (n - 1) % 2 == 0:
                    yield PartitionArc(j, n - 1, circle_arc_between(old, x))
                else:
                    yield PartitionArc(j, n - 1, circle_arc_between(x, old))
            if i >= q_n and i - q_n < q_n1:
                j = i - q_n
                u = prefix[j]
                if n % 2 == 0:
                    yield PartitionArc(j, n, circle_arc_between(u, x))
                else:
                    yield PartitionArc(j, n, circle_arc_between(x, u))
            ring[i % q_n1] = x
            if i + 1 < total:
                x = self.lift.apply(x)


def partition_stream(
    lift: CircleLift,
    marked: Fraction,
    n: int,
    extra_depth: int = 2,
    cap: int = 10_000_000,
    max_bits: int | None = None,
    height_cap: int | None = None,
) -> PartitionStream:
    """Streaming level-n partition with certified per-kind arc masses.

    Detects the height prefix a little past n so the invariant masses
    (the straightened lengths of the two arc kinds) are known to much
    better than the histogram resolution.
    """
    pipe_kwargs: dict = {"max_bits": max_bits}
    if height_cap is not None:
        pipe_kwargs["height_cap"] = height_cap
    _, trace = run_pipeline(
        lift, marked, depth=n + extra_depth, direction="forward", **pipe_kwargs
    )
    hs = trace.heights()
    if len(hs) < n:
        raise ConstructionError("pipeline could not certify the partition level")
    _, _, _, q_hi = prefix_pq(hs[:n])
    _, _, _, q_lo = prefix_pq(hs[: n - 1]) if n >= 2 else (1, 0, 0, 1)
    if q_hi + q_lo > cap:
        raise ResourceError(
            f"partition at level {n} needs {q_hi + q_lo} arcs, cap is {cap}"
        )
    return PartitionStream(lift, marked, n, (q_hi, q_lo), _arc_masses(hs, n))


def density_histogram(partition, bins: int) -> DensityHistogram:
    """Invariant mass per uniform bin from the level's straightening data.

    Accepts a materialized partition carrying `deltas` or a stream. Each
    arc carries its kind's exact straightened length; within the arc the
    straightening map is known only at the endpoints, so the mass spreads
    over the bins the arc covers in proportion to overlap. Masses add up
    to 1 exactly. Finer levels localize the mass, so a singular measure's
    min/max bin ratio keeps dropping with depth while a map smoothly
    conjugate to a rotation holds its ratio steady.
    """
    if bins < 1:
        raise ConstructionError("need at least one bin")
    deltas = getattr(partition, "deltas", None)
    if not deltas:
        raise ConstructionError("partition carries no arc masses")
    total = len(partition)
    if total < 10 * bins:
        raise ResourceError(
            f"{total} arcs cannot resolve {bins} bins; need at least {10 * bins}"
        )
    masses = [Fraction(0)] * bins
    count = 0
    one = Fraction(1)
    for entry in partition:
        mass = deltas[entry.kind]
        arc = entry.arc
        hi = arc.start + arc.length  # unwrapped; arc.end reduces mod 1
        pieces = [(arc.start, min(hi, one))]
        if hi > 1:
            pieces.append((Fraction(0), hi - 1))
        for s, e in pieces:
            j = (s.numerator * bins) // s.denominator
            while s < e:
                edge = Fraction(j + 1, bins)
                cut = min(e, edge)
                masses[j % bins] += mass * (cut - s) / arc.length
                s = cut
                j += 1
        count += 1
    assert sum(masses) == 1
    edges = tuple(Fraction(j, bins) for j in range(bins + 1))
    top = max(masses)
    bottom = min(masses)
    ratio = bottom / top if top > 0 else Fraction(0)
    return DensityHistogram(
        level=partition.level,
        bin_edges=edges,
        masses=tuple(masses),
        min_max_ratio=ratio,
        arc_count=count,
    )


# --------------------------------------------------------------------------
# singular one-tooth control


def build_control_lift(
    a: Fraction, offset: Fraction, tooth_at: Fraction = Fraction(1, 4)
) -> CircleLift:
    """Degree-one lift with a single unbalanced tooth.

    One slope-a stretch immediately followed by a slope-1/a relaxation of
    matching horizontal reach leaves a localized break pair of net size a;
    the only other break is the wrap. Such a map cannot have an absolutely
    continuous invariant measure, which is what the control run shows.
    """
    t = Fraction(tooth_at)
    if not 0 < t < 1 / (1 + a):
        raise ConstructionError("tooth must fit strictly inside the circle")
    if not 0 < offset < 1:
        raise ConstructionError("offset must lie in (0, 1)")
    pts = [
        (Fraction(0), offset),
        (t, offset + a * t),
        (t + a * t, offset + a * t + t),
        (Fraction(1), 1 + offset),
    ]
    return CircleLift(from_nodes(pts))


@dataclass(frozen=True)
class ControlTuning:
    offset: Fraction
    heights: tuple[int, ...]
    steps: int


def tune_control_offset(
    a: Fraction,
    prefix: list[int] | tuple[int, ...],
    tooth_at: Fraction = Fraction(1, 4),
    max_steps: int = 200,
) -> ControlTuning:
    """Bisect the control lift's offset until its heights match a prefix.

    The rotation number grows monotonically with the vertical offset, so
    comparing the detected prefix cylinder against the target cylinder as
    exact intervals steers a plain bisection. Offsets stay dyadic, which
    keeps every subsequent orbit computation cheap. Heights are capped
    well above the target's largest entry: an offset whose expansion
    blows past the cap hugs a convergent of its partial prefix, which
    pins its side of the target cylinder without running the huge level.
    """
    target = prefix_interval(prefix)
    depth = len(prefix)
    cap = 8 * max(prefix) + 64

    def classify(c: Fraction) -> tuple[int, tuple[int, ...]]:
        try:
            lift = build_control_lift(a, c, tooth_at)
            _, trace = run_pipeline(lift, Fraction(0), depth=depth, height_cap=cap)
        except ConstructionError:
            # no full first return: rotation number at or past 1/2
            return 1, ()
        hs = tuple(trace.heights())
        if not hs:
            # first height already beyond the cap: rotation number below 1/cap
            return -1, hs
        if trace.terminated:
            got: RatInterval = RatInterval.point(prefix_value(hs))
        else:
            got = prefix_interval(hs)
        if len(hs) >= depth and hs[:depth] == tuple(prefix):
            return 0, hs
        if got.lo >= target.hi:
            return 1, hs
        if got.hi <= target.lo:
            return -1, hs
        # capped run whose partial prefix matches: the value hugs the partial
        # convergent, which sits strictly outside the deeper target cylinder
        r = prefix_value(hs)
        return (1, hs) if r >= target.hi else (-1, hs)

    lo, hi = Fraction(0), Fraction(1)
    c = Fraction(1, 2)
    for step in range(1, max_steps + 1):
        side, hs = classify(c)
        if side == 0:
            return ControlTuning(offset=c, heights=hs, steps=step)
        if side > 0:
            hi = c
        else:
            lo = c
        c = (lo + hi) / 2
    raise ConstructionError(
        f"control offset bisection did not match the prefix in {max_steps} steps"
    )


def prefix_value(heights: tuple[int, ...]) -> Fraction:
    """Exact rational value of a finite partial-quotient expansion."""
    _, _, p, q = prefix_pq(heights)
    return Fraction(p, q)


@dataclass(frozen=True)
class ControlReport:
    offset: Fraction
    heights: tuple[int, ...]
    bins: tuple[int, int]
    control: dict[int, DensityHistogram]
    main: dict[int, DensityHistogram]
    control_decay: Fraction  # shallow ratio / deep ratio, > 1 means decay
    main_decay: Fraction
    verdict: str

    def to_json(self) -> dict:
        return {
            "offset": format_rat(self.offset),
            "heights": list(self.heights),
            "bins": list(self.bins),
            "control_ratios": {
                n: rat_to_decimal(h.min_max_ratio, 12) for n, h in self.control.items()
            },
            "main_ratios": {
                n: rat_to_decimal(h.min_max_ratio, 12) for n, h in self.main.items()
            },
            "control_decay": rat_to_decimal(self.control_decay, 12),
            "main_decay": rat_to_decimal(self.main_decay, 12),
            "verdict": self.verdict,
        }


def singular_control(
    a: Fraction,
    prefix: list[int] | tuple[int, ...],
    main_lift: CircleLift,
    depths: tuple[int, int] = (3, 5),
    bins: tuple[int, int] = (64, 512),
    control_min_decay: Fraction = Fraction(2),
    main_max_decay: Fraction = Fraction(3, 2),
) -> ControlReport:
    """Contrast histogram sharpening of a one-tooth map against the main map.

    Both maps share the same height prefix. Each depth gets the bin count
    its partition can resolve; at a fixed bin count every consistent
    estimate converges to the same bin masses, so the depth contrast has
    to come from resolution. The control's min/max bin ratio must drop
    from the shallow setting to the deep one by at least
    `control_min_decay`; the main map's may not drop by more than
    `main_max_decay`.
    """
    shallow, deep = depths
    if not 1 <= shallow < deep:
        raise ConstructionError("depths must be ordered and >= 1")
    if len(prefix) < deep + 2:
        raise ScheduleError("prefix must cover the deep histogram level plus two")
    tuning = tune_control_offset(a, prefix)
    control_lift = build_control_lift(a, tuning.offset)
    control_h: dict[int, DensityHistogram] = {}
    main_h: dict[int, DensityHistogram] = {}
    for n, b in zip(depths, bins):
        control_h[n] = density_histogram(
            partition_stream(control_lift, Fraction(0), n), b
        )
        main_h[n] = density_histogram(partition_stream(main_lift, Fraction(0), n), b)
    c_decay = control_h[shallow].min_max_ratio / control_h[deep].min_max_ratio
    m_decay = main_h[shallow].min_max_ratio / main_h[deep].min_max_ratio
    ok = c_decay >= control_min_decay and m_decay <= main_max_decay
    return ControlReport(
        offset=tuning.offset,
        heights=tuning.heights,
        bins=tuple(bins),
        control=control_h,
        main=main_h,
        control_decay=c_decay,
        main_decay=m_decay,
        verdict="pass" if ok else "fail",
    )
