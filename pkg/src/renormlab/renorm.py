"""Renormalization of commuting pairs for circle maps with breaks.

All pairs at all levels live in one coordinate frame: the circle lift
rotated so the marked point sits at 0. A pair holds the two branches of
the first-return map to the current fundamental segment; no rescaling is
ever applied, so lengths read off the maps are the actual d_n values and
every comparison against the solver's closed forms is an exact rational
equality check.

The module covers: initial pair construction (forward and backward),
height detection, the renormalization step f_{n+1} = f_n^k compose g_n,
trace bookkeeping, teeth verification against the closed-form layouts,
dynamical partitions, the nested-segment construction of the positive
measure set, break-orbit distinctness, and the segment families used by
the derivative-probe error budgets.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CertificationError, ConstructionError, ResourceError
from .plmaps import (
    CircleLift,
    PLMap,
    breaks_of,
    compose,
    evaluate,
    from_nodes,
    invert,
    iterate_k,
    restrict,
    translation_map,
)
from .rational import RatInterval, format_rat, hull
from .sequences import SequenceSolution

DEFAULT_HEIGHT_CAP = 1_000_000
DEFAULT_PARTITION_CAP = 10_000_000


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


# --------------------------------------------------------------------------
# commuting pairs


@dataclass(frozen=True)
class CommutingPair:
    """Level-n pre-renormalization pair in marked-point coordinates."""

    level: int
    f: PLMap
    g: PLMap
    marked_point: Fraction
    direction: str = "forward"

    def __post_init__(self) -> None:
        if self.direction not in ("forward", "backward"):
            raise ConstructionError("direction must be forward or backward")
        f0 = evaluate(self.f, Fraction(0))
        g0 = evaluate(self.g, Fraction(0))
        if f0 == 0 or g0 == 0 or _sign(f0) == _sign(g0):
            raise ConstructionError("pair images of 0 must straddle 0")
        dom_f = hull(Fraction(0), g0)
        dom_g = hull(Fraction(0), f0)
        if (self.f.xs[0], self.f.xs[-1]) != (dom_f.lo, dom_f.hi):
            raise ConstructionError("f domain must span 0 and g(0)")
        if (self.g.xs[0], self.g.xs[-1]) != (dom_g.lo, dom_g.hi):
            raise ConstructionError("g domain must span 0 and f(0)")
        if evaluate(self.f, g0) != evaluate(self.g, f0):
            raise ConstructionError("commutation f(g(0)) = g(f(0)) failed")

    @property
    def parity(self) -> str:
        return "even" if self.level % 2 == 0 else "odd"

    def f_at_zero(self) -> Fraction:
        return evaluate(self.f, Fraction(0))

    def g_at_zero(self) -> Fraction:
        return evaluate(self.g, Fraction(0))

    def fundamental_length(self) -> Fraction:
        """Length of the level-n fundamental segment: |f(0)|."""
        return abs(self.f_at_zero())

    def previous_length(self) -> Fraction:
        """Length of the level-(n-1) fundamental segment: |g(0)|."""
        return abs(self.g_at_zero())

    def bit_size(self) -> int:
        return max(self.f.bit_size(), self.g.bit_size())


def initial_pair(
    lift: CircleLift,
    marked: Fraction = Fraction(0),
    direction: str = "forward",
) -> CommutingPair:
    """Level-0 pair at a marked point.

    Forward: f is the lift viewed on [-1, 0], g is the unit left shift on
    [0, f(0)]. Backward: f is the inverse circle map viewed on [0, 1], g is
    the unit right shift on [f(0), 0].
    """
    marked = Fraction(marked)
    base = lift.marked_at(marked).base
    if direction == "forward":
        f = PLMap(
            tuple(x - 1 for x in base.xs), tuple(y - 1 for y in base.ys)
        )
        f0 = f.ys[-1]  # value at 0, equals base value at 0
        g = translation_map(Fraction(0), f0, Fraction(-1))
        return CommutingPair(0, f, g, marked, "forward")
    if direction == "backward":
        pts = [(x - 1, y - 1) for x, y in zip(base.xs, base.ys)]
        pts += list(zip(base.xs[1:], base.ys[1:]))
        ext = from_nodes(pts)
        fbar = restrict(invert(ext), RatInterval(Fraction(0), Fraction(1)))
        f0 = fbar.ys[0]  # negative: the backward image of the marked point
        g = translation_map(f0, Fraction(0), Fraction(1))
        return CommutingPair(0, fbar, g, marked, "backward")
    raise ConstructionError("direction must be forward or backward")


def detect_height(
    pair: CommutingPair, cap: int = DEFAULT_HEIGHT_CAP
) -> tuple[int, bool]:
    """Largest k with f^k(g(0)) on the same side of 0 as g(0).

    An exact hit of 0 counts as same side and is flagged: it can only
    happen when the underlying rotation number is rational (truncated),
    and the caller should expect the next level to degenerate.
    """
    g0 = pair.g_at_zero()
    side = _sign(g0)
    x = g0
    k = 0
    zero_hit = False
    while True:
        y = evaluate(pair.f, x)
        if y == 0:
            zero_hit = True
            k += 1
            x = y
            continue
        if _sign(y) == side:
            k += 1
            x = y
            if k > cap:
                raise ResourceError(f"height scan exceeded the cap {cap}")
            continue
        break
    if k < 1:
        raise ConstructionError("renormalization height must be >= 1")
    return k, zero_hit


@dataclass(frozen=True)
class StepResult:
    height: int
    zero_hit: bool
    pair: CommutingPair | None  # None when the next pair degenerates
    degenerate: bool


def renorm_step(
    pair: CommutingPair,
    max_bits: int | None = None,
    height_cap: int = DEFAULT_HEIGHT_CAP,
) -> StepResult:
    """One renormalization: (f, g) -> (f^k compose g, f restricted)."""
    k, zero_hit = detect_height(pair, cap=height_cap)
    g0 = pair.g_at_zero()
    f0 = pair.f_at_zero()
    seed = hull(g0, evaluate(pair.g, f0))
    fk = iterate_k(pair.f, k, seed, max_bits=max_bits)
    f_next = compose(fk, pair.g, max_bits=max_bits)
    next_zero = evaluate(f_next, Fraction(0))
    if next_zero == 0:
        return StepResult(k, zero_hit, None, True)
    g_next = restrict(pair.f, hull(Fraction(0), next_zero), max_bits=max_bits)
    nxt = CommutingPair(
        pair.level + 1, f_next, g_next, pair.marked_point, pair.direction
    )
    return StepResult(k, zero_hit, nxt, False)


def backward_step(
    pair: CommutingPair,
    max_bits: int | None = None,
    height_cap: int = DEFAULT_HEIGHT_CAP,
) -> StepResult:
    """Renormalization step for a backward pair (same algebra)."""
    if pair.direction != "backward":
        raise ConstructionError("backward_step needs a backward pair")
    return renorm_step(pair, max_bits=max_bits, height_cap=height_cap)


# --------------------------------------------------------------------------
# pipeline trace


@dataclass(frozen=True)
class LevelRecord:
    level: int
    length: Fraction  # fundamental segment length at this level
    height_to_next: int | None
    zero_hit: bool
    f_nodes: int
    g_nodes: int
    bit_size: int
    wall_ms: int

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "length": format_rat(self.length),
            "height_to_next": self.height_to_next,
            "zero_hit": self.zero_hit,
            "f_nodes": self.f_nodes,
            "g_nodes": self.g_nodes,
            "bit_size": self.bit_size,
            "wall_ms": self.wall_ms,
        }


@dataclass(frozen=True)
class RenormTrace:
    marked_point: Fraction
    direction: str
    levels: tuple[LevelRecord, ...]
    terminated: bool = False  # rational rotation number: pipeline ended
    capped: bool = False  # resource watchdog stopped the pipeline
    cap_note: str = ""

    def heights(self) -> list[int]:
        return [rec.height_to_next for rec in self.levels if rec.height_to_next]

    def lengths(self) -> list[Fraction]:
        return [rec.length for rec in self.levels]

    @property
    def depth(self) -> int:
        return self.levels[-1].level if self.levels else -1

    def to_json(self) -> dict:
        return {
            "marked_point": format_rat(self.marked_point),
            "direction": self.direction,
            "levels": [rec.to_json() for rec in self.levels],
            "terminated": self.terminated,
            "capped": self.capped,
            "cap_note": self.cap_note,
        }

    def write_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


def run_pipeline(
    lift: CircleLift,
    marked: Fraction = Fraction(0),
    depth: int = 6,
    direction: str = "forward",
    max_bits: int | None = None,
    height_cap: int = DEFAULT_HEIGHT_CAP,
) -> tuple[list[CommutingPair], RenormTrace]:
    """Renormalize `depth` times; stop early on termination or bit cap."""
    pair = initial_pair(lift, marked, direction)
    pairs = [pair]
    records: list[LevelRecord] = []
    terminated = False
    capped = False
    cap_note = ""
    for _ in range(depth):
        t0 = time.monotonic()
        try:
            step = renorm_step(pair, max_bits=max_bits, height_cap=height_cap)
        except ResourceError as exc:
            capped = True
            cap_note = str(exc)
            break
        ms = int((time.monotonic() - t0) * 1000)
        records.append(
            LevelRecord(
                level=pair.level,
                length=pair.fundamental_length(),
                height_to_next=step.height,
                zero_hit=step.zero_hit,
                f_nodes=pair.f.node_count(),
                g_nodes=pair.g.node_count(),
                bit_size=pair.bit_size(),
                wall_ms=ms,
            )
        )
        if step.degenerate:
            terminated = True
            break
        pair = step.pair
        pairs.append(pair)
    if not terminated and not capped:
        records.append(
            LevelRecord(
                level=pair.level,
                length=pair.fundamental_length(),
                height_to_next=None,
                zero_hit=False,
                f_nodes=pair.f.node_count(),
                g_nodes=pair.g.node_count(),
                bit_size=pair.bit_size(),
                wall_ms=0,
            )
        )
    trace = RenormTrace(
        marked_point=Fraction(marked),
        direction=direction,
        levels=tuple(records),
        terminated=terminated,
        capped=capped,
        cap_note=cap_note,
    )
    return pairs, trace


# --------------------------------------------------------------------------
# teeth verification


@dataclass(frozen=True)
class ToothSpec:
    slope: Fraction
    interval: RatInterval


@dataclass(frozen=True)
class ToothRow:
    which: str  # "f" or "g"
    expected: ToothSpec | None
    computed: ToothSpec | None
    verdict: str  # "pass" | "fail" | "indeterminate"
    discrepancy: Fraction


@dataclass(frozen=True)
class TeethReport:
    level: int
    rows: tuple[ToothRow, ...]

    @property
    def all_pass(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)

    def unmatched(self) -> list[ToothRow]:
        return [r for r in self.rows if r.expected is None or r.computed is None]


def computed_teeth(f: PLMap) -> list[ToothSpec]:
    """Maximal non-unit-slope intervals of a canonical PL map."""
    out: list[ToothSpec] = []
    slopes = f.slopes()
    for i, s in enumerate(slopes):
        if s != 1:
            out.append(ToothSpec(s, RatInterval(f.xs[i], f.xs[i + 1])))
    return out


def _match_teeth(
    which: str,
    computed: list[ToothSpec],
    expected: list[ToothSpec],
    tol: Fraction,
    err_floor: Fraction,
) -> list[ToothRow]:
    rows: list[ToothRow] = []
    comp = sorted(computed, key=lambda t: t.interval.lo)
    expc = sorted(expected, key=lambda t: t.interval.lo)
    for got, want in zip(comp, expc):
        if got.slope != want.slope:
            rows.append(ToothRow(which, want, got, "fail", Fraction(0)))
            continue
        disc = max(
            abs(got.interval.lo - want.interval.lo),
            abs(got.interval.hi - want.interval.hi),
        )
        if disc + err_floor <= tol:
            verdict = "pass"
        elif disc - err_floor > tol:
            verdict = "fail"
        else:
            verdict = "indeterminate"
        rows.append(ToothRow(which, want, got, verdict, disc))
    for extra in comp[len(expc):]:
        rows.append(ToothRow(which, None, extra, "fail", Fraction(0)))
    for missing in expc[len(comp):]:
        rows.append(ToothRow(which, missing, None, "fail", Fraction(0)))
    return rows


def verify_teeth(
    pair: CommutingPair,
    expected_f: Sequence[ToothSpec],
    expected_g: Sequence[ToothSpec],
    tol: Fraction,
    err_floor: Fraction = Fraction(0),
) -> TeethReport:
    rows = _match_teeth("f", computed_teeth(pair.f), list(expected_f), tol, err_floor)
    rows += _match_teeth("g", computed_teeth(pair.g), list(expected_g), tol, err_floor)
    return TeethReport(level=pair.level, rows=tuple(rows))


def expected_teeth_forward(
    sol: SequenceSolution, level: int
) -> tuple[list[ToothSpec], list[ToothSpec]]:
    """Closed-form teeth of the forward pair marked at the break point."""
    a = sol.a
    d, dl = sol.d, sol.delta
    m = level
    if m == 0:
        f = [
            ToothSpec(a, RatInterval(Fraction(-1), Fraction(-1) + dl[0])),
            ToothSpec(
                1 / a,
                RatInterval(
                    Fraction(-1) + d[0] + a * dl[2],
                    Fraction(-1) + d[0] + a * dl[0] + a * dl[2],
                ),
            ),
        ]
        return f, []
    if m % 2 == 1:
        f = [
            ToothSpec(a, RatInterval(Fraction(0), dl[m + 1])),
            ToothSpec(
                1 / a, RatInterval(dl[m - 1], dl[m - 1] + a * dl[m + 1])
            ),
        ]
        return f, []
    f = [
        ToothSpec(
            1 / a,
            RatInterval(
                -d[m - 1] + a * dl[m + 2],
                -d[m - 1] + a * dl[m + 2] + a * dl[m],
            ),
        )
    ]
    g = [ToothSpec(a, RatInterval(Fraction(0), dl[m]))]
    return f, g


def expected_teeth_backward(
    sol: SequenceSolution, level: int
) -> tuple[list[ToothSpec], list[ToothSpec]]:
    """Closed-form teeth of the backward pair marked at the break point."""
    a = sol.a
    d, dl = sol.d, sol.delta
    m = level
    if m % 2 == 0:
        f = [
            ToothSpec(1 / a, RatInterval(d[m], d[m] + a * dl[m])),
            ToothSpec(
                a,
                RatInterval(
                    2 * d[m] + (a - 1) * dl[m] + a * dl[m + 2],
                    2 * d[m] + a * dl[m] + a * dl[m + 2],
                ),
            ),
        ]
        return f, []
    f = [
        ToothSpec(1 / a, RatInterval(-d[m], -d[m] + a * dl[m + 1])),
        ToothSpec(
            a,
            RatInterval(
                -d[m] + a * dl[m + 1] + dl[m - 1] - dl[m + 1],
                -d[m] + a * dl[m + 1] + dl[m - 1],
            ),
        ),
    ]
    return f, []


def expected_teeth_marked(
    sol: SequenceSolution, level: int, b: Fraction
) -> tuple[list[ToothSpec], list[ToothSpec]]:
    """Closed-form teeth of a pair marked at an interior surviving point.

    Both teeth ride at an offset b (the nearest preimage of the break
    point); their relative layout is fully determined by the level.
    """
    a = sol.a
    d, dl = sol.d, sol.delta
    m = level
    if m % 2 == 0:
        f = [
            ToothSpec(a, RatInterval(b, b + dl[m])),
            ToothSpec(
                1 / a,
                RatInterval(
                    b + d[m] + a * dl[m + 2],
                    b + d[m] + a * dl[m] + a * dl[m + 2],
                ),
            ),
        ]
    else:
        f = [
            ToothSpec(a, RatInterval(b, b + dl[m + 1])),
            ToothSpec(
                1 / a,
                RatInterval(
                    b + dl[m - 1], b + dl[m - 1] + a * dl[m + 1]
                ),
            ),
        ]
    return f, []


@dataclass(frozen=True)
class MarkedToothCheck:
    level: int
    b: Fraction
    b_range: RatInterval
    b_in_range: bool
    report: TeethReport

    @property
    def all_pass(self) -> bool:
        return self.b_in_range and self.report.all_pass


def verify_marked_teeth(
    pair: CommutingPair,
    sol: SequenceSolution,
    height: int,
    tol: Fraction,
    err_floor: Fraction = Fraction(0),
) -> MarkedToothCheck:
    """Check an interior-marked pair against the offset closed form.

    The offset b is read off the computed map (start of the slope-a
    tooth) and certified against its allowed range: between the domain
    end and the (k-2)-nd image of that end under f itself.
    """
    teeth = computed_teeth(pair.f)
    uppers = [t for t in teeth if t.slope == sol.a]
    if len(uppers) != 1:
        raise CertificationError(
            f"level {pair.level}: expected one slope-a tooth, saw {len(uppers)}"
        )
    b = uppers[0].interval.lo
    m = pair.level
    edge = -pair.previous_length() if m % 2 == 0 else pair.previous_length()
    x = edge
    for _ in range(height - 2):
        x = evaluate(pair.f, x)
    if m % 2 == 0:
        b_range = RatInterval(edge, x)
        b_ok = edge < b <= x
    else:
        b_range = RatInterval(x, edge)
        b_ok = x <= b < edge
    expected_f, expected_g = expected_teeth_marked(sol, m, b)
    report = verify_teeth(pair, expected_f, expected_g, tol, err_floor)
    return MarkedToothCheck(m, b, b_range, b_ok, report)


# --------------------------------------------------------------------------
# dynamical partitions


@dataclass(frozen=True)
class CircleArc:
    """Positively oriented arc on the circle: [start, start+length) mod 1."""

    start: Fraction
    length: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.start < 1:
            raise ConstructionError("arc start must lie in [0, 1)")
        if not 0 < self.length < 1:
            raise ConstructionError("arc length must lie in (0, 1)")

    @property
    def end(self) -> Fraction:
        e = self.start + self.length
        return e - 1 if e >= 1 else e

    def midpoint(self) -> Fraction:
        m = self.start + self.length / 2
        return m - 1 if m >= 1 else m

    def contains(self, x: Fraction) -> bool:
        x = x - (x.numerator // x.denominator)
        t = x - self.start
        if t < 0:
            t += 1
        return 0 <= t < self.length


def circle_arc_between(u: Fraction, v: Fraction) -> CircleArc:
    """Positively oriented arc from u to v (both taken mod 1)."""
    u -= u.numerator // u.denominator
    v -= v.numerator // v.denominator
    length = v - u
    if length <= 0:
        length += 1
    return CircleArc(u, length)


@dataclass(frozen=True)
class PartitionArc:
    index: int
    kind: int  # partition element of fundamental level `kind`
    arc: CircleArc


@dataclass(frozen=True)
class DynamicalPartition:
    level: int
    marked: Fraction
    entries: tuple[PartitionArc, ...]
    q_fine: int  # count of kind level-1 arcs
    q_coarse: int  # count of kind level arcs
    deltas: dict[int, Fraction] | None = None  # invariant mass per arc kind

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def total_length(self) -> Fraction:
        return sum((e.arc.length for e in self.entries), Fraction(0))

    def of_kind(self, kind: int) -> list[PartitionArc]:
        return [e for e in self.entries if e.kind == kind]

    def write_csv(self, path: str) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "kind", "start", "length"])
            for e in self.entries:
                writer.writerow(
                    [
                        e.index,
                        e.kind,
                        format_rat(e.arc.start),
                        format_rat(e.arc.length),
                    ]
                )


def orbit_points(
    lift: CircleLift, start: Fraction, count: int
) -> list[Fraction]:
    """First `count` points of the forward orbit of `start` under the map."""
    pts = [Fraction(start)]
    for _ in range(count - 1):
        pts.append(lift.apply(pts[-1]))
    return pts


def build_partition(
    lift: CircleLift,
    marked: Fraction,
    n: int,
    qs: tuple[int, int] | None = None,
    cap: int = DEFAULT_PARTITION_CAP,
) -> DynamicalPartition:
    """Level-n dynamical partition: q_n arcs of kind n-1, q_{n-1} of kind n.

    The arc of kind m at index i runs between orbit points i and i + q_m,
    oriented positively from i when m is even (the m-th fundamental
    segment sits on the positive side of the marked point) and toward i
    when m is odd. Exact circle cover is asserted.
    """
    if n < 1:
        raise ConstructionError("partition level must be >= 1")
    deltas: dict[int, Fraction] | None = None
    if qs is None:
        # detect a little past n so the per-kind invariant masses come out
        # far tighter than any histogram built on top of them
        _, trace = run_pipeline(lift, marked, depth=n + 2, direction="forward")
        hs = trace.heights()
        if len(hs) < n:
            raise ConstructionError("pipeline could not certify the level")
        q_prev, q_cur = 1, hs[0]
        qs_all = [1, q_cur]
        for k in hs[1:]:
            q_prev, q_cur = q_cur, k * q_cur + q_prev
            qs_all.append(q_cur)
        qs = (qs_all[n], qs_all[n - 1])
        deltas = _arc_masses(hs, n)
    q_n, q_n1 = qs
    total = q_n + q_n1
    if total > cap:
        raise ResourceError(
            f"partition at level {n} needs {total} arcs, cap is {cap}"
        )
    pts = orbit_points(lift, marked, total)
    entries: list[PartitionArc] = []
    for i in range(q_n):
        u, v = pts[i], pts[i + q_n1]
        arc = (
            circle_arc_between(u, v) if (n - 1) % 2 == 0 else circle_arc_between(v, u)
        )
        entries.append(PartitionArc(i, n - 1, arc))
    for i in range(q_n1):
        u, v = pts[i], pts[i + q_n]
        arc = circle_arc_between(u, v) if n % 2 == 0 else circle_arc_between(v, u)
        entries.append(PartitionArc(i, n, arc))
    ordered = sorted(entries, key=lambda e: e.arc.start)
    for cur, nxt in zip(ordered, ordered[1:]):
        if cur.arc.end != nxt.arc.start:
            raise ConstructionError("partition arcs failed to tile the circle")
    if ordered[-1].arc.end != ordered[0].arc.start:
        raise ConstructionError("partition arcs failed to close the circle")
    part = DynamicalPartition(
        level=n,
        marked=Fraction(marked),
        entries=tuple(ordered),
        q_fine=q_n,
        q_coarse=q_n1,
        deltas=deltas,
    )
    assert part.total_length() == 1
    return part


def _arc_masses(heights: list[int], n: int) -> dict[int, Fraction]:
    """Invariant mass of a kind-m partition arc, for m = n-1 and n.

    Uses the midpoint of the detected-prefix cylinder as the rotation
    number; the two masses then satisfy the exact tiling identity
    q_n * mass[n-1] + q_{n-1} * mass[n] = 1 regardless of where in the
    cylinder the true value sits.
    """
    ps = [1, 0]
    qs = [0, 1]
    for k in heights:
        ps.append(k * ps[-1] + ps[-2])
        qs.append(k * qs[-1] + qs[-2])
    # cylinder between p_M/q_M and the mediant with the previous convergent
    rho = (Fraction(ps[-1], qs[-1]) + Fraction(ps[-1] + ps[-2], qs[-1] + qs[-2])) / 2
    out: dict[int, Fraction] = {}
    for m in (n - 1, n):
        v = qs[m + 1] * rho - ps[m + 1]
        out[m] = v if m % 2 == 0 else -v
        if out[m] <= 0:
            raise ConstructionError("arc mass collapsed; detected prefix too short")
    return out


# --------------------------------------------------------------------------
# nested-segment construction of the surviving set


def translate_on(f: PLMap, seg: RatInterval) -> RatInterval:
    """Image of seg under f, asserting f is a pure translation there."""
    lo_i = evaluate(f, seg.lo)
    hi_i = evaluate(f, seg.hi)
    if hi_i - lo_i != seg.hi - seg.lo:
        raise ConstructionError(
            "segment touched a non-unit-slope tooth during realization"
        )
    # length preservation could mask canceling teeth; check the pieces
    for i in range(len(f.xs) - 1):
        if f.xs[i + 1] <= seg.lo or f.xs[i] >= seg.hi:
            continue
        if f._slope(i) != 1:
            raise ConstructionError(
                "segment overlaps a tooth despite preserved length"
            )
    return RatInterval(lo_i, hi_i)


@dataclass(frozen=True)
class ThetaLevel:
    level: int
    count: int
    measure: Fraction
    segment_length: Fraction


@dataclass(frozen=True)
class ThetaLevels:
    levels: tuple[ThetaLevel, ...]
    heights: tuple[int, ...]

    def level(self, n: int) -> ThetaLevel:
        return self.levels[n]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def chain_index(chain: Sequence[int], heights: Sequence[int]) -> int:
    """Partition index of the segment addressed by a coefficient chain."""
    q_prev, q_cur = 0, 1  # q_{-1}, q_0
    idx = 0
    for m, j in enumerate(chain):
        idx += q_prev + j * q_cur
        q_prev, q_cur = q_cur, heights[m] * q_cur + q_prev
    return idx


def realize_chain(
    pairs: Sequence[CommutingPair], chain: Sequence[int], heights: Sequence[int]
) -> RatInterval:
    """Exact segment for a coefficient chain, in marked coordinates.

    chain = (j_1, ..., j_{n+1}) with 0 <= j_{m+1} <= k_{m+1} - 3 addresses
    one level-n segment. Realization applies, innermost first, the level-m
    backward g then j_{m+1} copies of the level-m backward f; every
    application must be a pure translation (the construction never lets
    surviving segments touch a tooth).
    """
    n = len(chain) - 1
    if n < 0 or n >= len(pairs):
        raise ConstructionError("chain length exceeds certified depth")
    for m, j in enumerate(chain):
        if not 0 <= j <= heights[m] - 3:
            raise ConstructionError(
                f"chain coefficient {j} outside [0, k-3] at position {m}"
            )
    seg = hull(Fraction(0), pairs[n].f_at_zero())
    for m in range(n, -1, -1):
        seg = translate_on(pairs[m].g, seg)
        for _ in range(chain[m]):
            seg = translate_on(pairs[m].f, seg)
    return seg


def build_theta(
    pairs: Sequence[CommutingPair], depth: int, heights: Sequence[int]
) -> ThetaLevels:
    """Counts and exact measures of the nested surviving sets."""
    if pairs[0].direction != "backward":
        raise ConstructionError("the surviving set is built on backward pairs")
    if depth >= len(pairs) or depth >= len(heights):
        raise ConstructionError("requested depth exceeds certified pipeline")
    levels: list[ThetaLevel] = []
    count = 1
    for n in range(depth + 1):
        if heights[n] < 3:
            raise ConstructionError("heights below 3 leave no surviving indices")
        count *= heights[n] - 2
        seg_len = pairs[n].fundamental_length()
        levels.append(
            ThetaLevel(
                level=n,
                count=count,
                measure=seg_len * count,
                segment_length=seg_len,
            )
        )
    return ThetaLevels(levels=tuple(levels), heights=tuple(heights[: depth + 1]))


def sample_chains(
    heights: Sequence[int], level: int, count: int, seed: int = 0
) -> list[tuple[int, ...]]:
    """Deterministic sample of coefficient chains at a level.

    Enumerates all chains when their number is within count; otherwise
    draws without replacement using a seeded generator.
    """
    import random

    sizes = [heights[m] - 2 for m in range(level + 1)]
    total = 1
    for s in sizes:
        total *= s
    if total <= count:
        chains = []

        def rec(prefix: list[int], m: int) -> None:
            if m > level:
                chains.append(tuple(prefix))
                return
            for j in range(sizes[m]):
                rec(prefix + [j], m + 1)

        rec([], 0)
        return chains
    rng = random.Random(seed)
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    while len(out) < count:
        chain = tuple(rng.randrange(s) for s in sizes)
        if chain in seen:
            continue
        seen.add(chain)
        out.append(chain)
    return out


def chain_midpoint(
    pairs: Sequence[CommutingPair], chain: Sequence[int], heights: Sequence[int]
) -> Fraction:
    """Exact midpoint of a chain's segment, in marked coordinates."""
    seg = realize_chain(pairs, chain, heights)
    return seg.mid


# --------------------------------------------------------------------------
# break-orbit distinctness


@dataclass(frozen=True)
class OrbitLevelRow:
    level: int
    break_count: int
    sizes_ok: bool
    min_gap: Fraction | None
    verdict: str


@dataclass(frozen=True)
class OrbitVerdict:
    rows: tuple[OrbitLevelRow, ...]

    @property
    def all_distinct(self) -> bool:
        return all(r.verdict == "distinct" for r in self.rows)

    def first_collision(self) -> int | None:
        for r in self.rows:
            if r.verdict != "distinct":
                return r.level
        return None


def distinct_break_orbits(
    pairs: Sequence[CommutingPair], a: Fraction, tol: Fraction
) -> OrbitVerdict:
    """Check that every certified level shows 4 distinct interior breaks.

    Runs on a pipeline marked at an interior surviving point, where the
    closed forms put both teeth strictly inside the domain: 4 break
    locations with size multiset {a, a, 1/a, 1/a}. A level with fewer
    breaks, wrong sizes, or a gap below tol signals break orbits that
    merged (or could not be separated at this precision).
    """
    expected_sizes = sorted([a, a, 1 / a, 1 / a])
    rows: list[OrbitLevelRow] = []
    for pair in pairs:
        brs = breaks_of(pair.f)
        count = len(brs)
        sizes_ok = sorted(b.size for b in brs) == expected_sizes
        min_gap: Fraction | None = None
        if count >= 2:
            locs = sorted(b.location for b in brs)
            min_gap = min(v - u for u, v in zip(locs, locs[1:]))
        if count == 4 and sizes_ok and min_gap is not None and min_gap > tol:
            verdict = "distinct"
        elif count == 4 and sizes_ok and min_gap is not None and min_gap > 0:
            verdict = "indeterminate"
        else:
            verdict = "collision"
        rows.append(OrbitLevelRow(pair.level, count, sizes_ok, min_gap, verdict))
    return OrbitVerdict(rows=tuple(rows))


def pair_tooth_summary(pair: CommutingPair) -> list[ToothSpec]:
    """Teeth of f and g together (the level's full non-unit-slope data)."""
    return computed_teeth(pair.f) + computed_teeth(pair.g)


# --------------------------------------------------------------------------
# segment families for the probe error budgets


def gamma_segments(
    pairs: Sequence[CommutingPair],
    n: int,
    s: int,
    heights: Sequence[int],
) -> list[RatInterval]:
    """Level families: all partition segments of depth n+s inside the
    level-(n-1) fundamental segment, realized exactly by endpoint orbits.

    s = 0: the fundamental segment itself. s >= 1: recursively, the family
    is the deeper-by-two family plus images of the next level's family
    under f_n^j compose g_n for j = 0..k_{n+1}-1.
    """
    if s < 0:
        raise ConstructionError("family order must be >= 0")
    if n < 0 or n + s >= len(pairs):
        raise ConstructionError("family depth exceeds certified pipeline")
    if s == 0:
        return [hull(Fraction(0), pairs[n].g_at_zero())]
    out: list[RatInterval] = []
    if s >= 2:
        out.extend(gamma_segments(pairs, n + 2, s - 2, heights))
    inner = gamma_segments(pairs, n + 1, s - 1, heights)
    k = heights[n]
    for seg in inner:
        cur = RatInterval(
            evaluate(pairs[n].g, seg.lo), evaluate(pairs[n].g, seg.hi)
        )
        out.append(cur)
        for _ in range(k - 1):
            cur = RatInterval(
                evaluate(pairs[n].f, cur.lo), evaluate(pairs[n].f, cur.hi)
            )
            out.append(cur)
    return out


@dataclass(frozen=True)
class GammaCheck:
    n: int
    s: int
    count: int
    max_deviation: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.bound


def gamma_deviation_check(
    pairs: Sequence[CommutingPair],
    sol: SequenceSolution,
    n: int,
    s: int,
    heights: Sequence[int],
) -> GammaCheck:
    """Spot-check the uniform-length claim for a family at (n, s) <= 2.

    Deviations |length - d| are bounded by (a-1) delta at the parity the
    construction dictates: the even-level tooth of the outermost map that
    can stretch a segment exactly once.
    """
    if s not in (1, 2):
        raise ConstructionError("deviation check applies to s = 1 or 2")
    segs = gamma_segments(pairs, n, s, heights)
    base = pairs[n + s - 1].fundamental_length()
    max_dev = max(abs(seg.width - base) for seg in segs)
    a = sol.a
    # only one outer-map tooth can stretch a family member, and only at
    # the even level; a fully odd history leaves every length exact
    if s == 1:
        bound = (a - 1) * sol.delta[n] if n % 2 == 0 else Fraction(0)
    else:
        n_prime = n if n % 2 == 0 else n + 1
        bound = (a - 1) * sol.delta[n_prime]
    return GammaCheck(n=n, s=s, count=len(segs), max_deviation=max_dev, bound=bound)
