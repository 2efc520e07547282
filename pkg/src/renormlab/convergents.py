"""Convergent tables and certified enclosures of the rotation number.

The table carries p_n, q_n from the standard recurrences together with a
rational interval [delta_lo, delta_hi] enclosing |q_n rho - p_n| for every
rho compatible with the schedule beyond the internal depth. Enclosures are
evaluated directly from the two deepest internal convergents (the backward
recurrence is kept as a cross-check only), so they are as tight as the
internal depth allows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import CertificationError, ScheduleError
from .rational import RatInterval, format_rat, rat_to_decimal
from .schedules import QuotientSchedule, evaluate_schedule, validate_hypotheses


@dataclass(frozen=True)
class ConvergentRow:
    n: int
    p: int
    q: int
    delta: RatInterval


@dataclass(frozen=True)
class RhoEnclosure:
    lo: Fraction
    hi: Fraction
    level: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def interval(self) -> RatInterval:
        return RatInterval(self.lo, self.hi)


@dataclass(frozen=True)
class ConvergentTable:
    schedule: QuotientSchedule
    depth: int  # exported rows run n = -1 .. depth
    rows: tuple[ConvergentRow, ...]
    rho: RatInterval  # interval the enclosures were evaluated against
    internal_depth: int

    def row(self, n: int) -> ConvergentRow:
        if n < -1 or n > self.depth:
            raise CertificationError(f"table holds rows -1..{self.depth}, row {n} requested")
        return self.rows[n + 1]

    def q(self, n: int) -> int:
        return self.row(n).q

    def p(self, n: int) -> int:
        return self.row(n).p

    def delta(self, n: int) -> RatInterval:
        return self.row(n).delta

    def delta_mid(self, n: int) -> Fraction:
        return self.row(n).delta.mid

    def k(self, n: int) -> int:
        return evaluate_schedule(self.schedule, n)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "p", "q", "delta_lo", "delta_hi", "delta_mid_decimal"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.n,
                        row.p,
                        row.q,
                        format_rat(row.delta.lo),
                        format_rat(row.delta.hi),
                        rat_to_decimal(row.delta.mid),
                    ]
                )


def _pq_sequence(sched: QuotientSchedule, top: int) -> tuple[list[int], list[int]]:
    """p_n, q_n for n = -1..top as plain lists (index shifted by 1)."""
    ps = [1, 0]  # n = -1, 0
    qs = [0, 1]
    for n in range(1, top + 1):
        k = evaluate_schedule(sched, n)
        ps.append(k * ps[-1] + ps[-2])
        qs.append(k * qs[-1] + qs[-2])
    return ps, qs


def convergent(sched: QuotientSchedule, n: int) -> Fraction:
    """p_n/q_n for n >= 1."""
    ps, qs = _pq_sequence(sched, n)
    return Fraction(ps[n + 1], qs[n + 1])


def _delta_of(ps: list[int], qs: list[int], n: int, rho: Fraction) -> Fraction:
    """|q_n rho - p_n| with the alternating sign convention made explicit."""
    value = qs[n + 1] * rho - ps[n + 1]
    return value if n % 2 == 0 else -value


def build_convergents(
    sched: QuotientSchedule, depth: int, internal_depth: int | None = None
) -> ConvergentTable:
    """Build rows -1..depth with certified delta enclosures.

    internal_depth controls how deep the two bracketing convergents sit;
    it is raised automatically until every exported enclosure width is at
    most 1/(q_n q_{n+1}). Explicit lists cap the reachable depth and raise
    a schedule error when that cap defeats the width requirement.
    """
    if depth < 1:
        raise ScheduleError("table depth must be >= 1")
    report = validate_hypotheses(sched, sched.a_hint)
    if not report.passed:
        raise ScheduleError(
            "hypothesis gate failed: " + ", ".join(report.failed_names())
        )

    cap = sched.max_depth
    want = max(internal_depth or 0, depth + 2)
    if cap is not None and want > cap:
        raise ScheduleError(
            f"explicit schedule supports depth {cap}, internal depth {want} needed"
        )
    ps, qs = _pq_sequence(sched, want)

    def width_ok(ps: list[int], qs: list[int], d: int) -> bool:
        # exported width = q_n * rho-width; require <= 1/(q_n q_{n+1})
        rho_w_den = qs[d] * qs[d + 1]  # rho width = 1/(q_{d-1} q_d) at indices d-1, d
        top_n = depth
        return qs[top_n + 1] ** 2 * qs[top_n + 2] <= rho_w_den

    while not width_ok(ps, qs, want):
        want += 1
        if cap is not None and want > cap:
            raise ScheduleError(
                "explicit schedule too short to certify enclosure widths at this depth"
            )
        k = evaluate_schedule(sched, want)
        ps.append(k * ps[-1] + ps[-2])
        qs.append(k * qs[-1] + qs[-2])

    c_a = Fraction(ps[want], qs[want])  # convergent at level want-1
    c_b = Fraction(ps[want + 1], qs[want + 1])  # level want
    rho = RatInterval(min(c_a, c_b), max(c_a, c_b))

    rows = []
    for n in range(-1, depth + 1):
        at_lo = _delta_of(ps, qs, n, rho.lo)
        at_hi = _delta_of(ps, qs, n, rho.hi)
        iv = RatInterval(min(at_lo, at_hi), max(at_lo, at_hi))
        if iv.lo <= 0:
            raise CertificationError(f"delta enclosure at row {n} is not positive")
        rows.append(ConvergentRow(n=n, p=ps[n + 1], q=qs[n + 1], delta=iv))

    table = ConvergentTable(
        schedule=sched,
        depth=depth,
        rows=tuple(rows),
        rho=rho,
        internal_depth=want,
    )
    _check_table_invariants(table)
    return table


def _check_table_invariants(table: ConvergentTable) -> None:
    rows = table.rows
    assert rows[0].p == 1 and rows[0].q == 0
    assert rows[1].p == 0 and rows[1].q == 1
    assert rows[0].delta.lo == 1 and rows[0].delta.hi == 1
    for n in range(1, table.depth + 1):
        k = table.k(n)
        assert table.p(n) == k * table.p(n - 1) + table.p(n - 2)
        assert table.q(n) == k * table.q(n - 1) + table.q(n - 2)
        assert gcd(table.p(n), table.q(n)) == 1
    for row in rows:
        if row.q:
            assert row.q * row.delta.hi < 1
    for shallow, deep in zip(rows, rows[1:]):
        # strict decrease with a gap: deeper upper end below shallower lower end
        assert deep.delta.hi < shallow.delta.lo
    for n in range(-1, table.depth - 1):
        direct = table.delta(n)
        recur = table.k(n + 2) * table.delta(n + 1) + table.delta(n + 2)
        assert recur.encloses(direct), f"recurrence cross-check failed at row {n}"
    for n in range(0, table.depth):
        cap = Fraction(1, table.q(n) * table.q(n + 1))
        assert table.delta(n).width <= cap


def rho_enclosure(table: ConvergentTable, level: int | None = None) -> RhoEnclosure:
    """Ordered interval between consecutive convergents at `level`.

    Defaults to the deepest exported level. Every deeper convergent and the
    limit rotation number lie inside.
    """
    n = table.depth if level is None else level
    if n < 0 or n + 1 > table.depth:
        if n + 1 > table.depth:
            raise CertificationError(
                f"rho enclosure at level {n} needs row {n + 1}; table depth {table.depth}"
            )
        raise CertificationError("rho enclosure level must be >= 0")
    c_n = Fraction(table.p(n), table.q(n))
    c_next = Fraction(table.p(n + 1), table.q(n + 1))
    lo, hi = min(c_n, c_next), max(c_n, c_next)
    out = RhoEnclosure(lo=lo, hi=hi, level=n)
    assert out.width == Fraction(1, table.q(n) * table.q(n + 1))
    return out


def prefix_pq(heights: list[int] | tuple[int, ...]) -> tuple[int, int, int, int]:
    """(p_{M-1}, q_{M-1}, p_M, q_M) for a raw list of partial quotients."""
    if not heights:
        raise ScheduleError("empty height prefix")
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for k in heights:
        if k < 1:
            raise ScheduleError("partial quotients must be >= 1")
        p, p_prev = k * p + p_prev, p
        q, q_prev = k * q + q_prev, q
    return p_prev, q_prev, p, q


def prefix_interval(heights: list[int] | tuple[int, ...]) -> RatInterval:
    """Cylinder of all rotation numbers whose expansion starts with `heights`.

    The interval spans the deepest convergent and its mediant with the
    previous one; any continuation of the prefix lands strictly inside.
    """
    p_prev, q_prev, p, q = prefix_pq(heights)
    u = Fraction(p, q)
    v = Fraction(p + p_prev, q + q_prev)
    return RatInterval(min(u, v), max(u, v))


def delta_intervals(
    heights: list[int] | tuple[int, ...], top: int
) -> dict[int, RatInterval]:
    """Enclosures of the signed convergent gaps up to level `top`.

    Gap m is (-1)^m (q_m rho - p_m), positive for every rho inside the
    prefix cylinder; enclosures come from cylinder endpoint arithmetic.
    """
    if top >= len(heights):
        raise ScheduleError(
            f"gap level {top} needs at least {top + 1} certified heights"
        )
    cyl = prefix_interval(heights)
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out: dict[int, RatInterval] = {}
    for m in range(0, top + 1):
        # row m uses p_m, q_m; build them incrementally
        if m >= 1:
            k = heights[m - 1]
            p, p_prev = k * p + p_prev, p
            q, q_prev = k * q + q_prev, q
        lo_v = q * cyl.lo - p
        hi_v = q * cyl.hi - p
        if m % 2 == 1:
            lo_v, hi_v = -hi_v, -lo_v
        if lo_v < 0:
            lo_v = Fraction(0)
        if hi_v <= 0:
            raise CertificationError(
                f"gap enclosure at level {m} collapsed; prefix too short"
            )
        out[m] = RatInterval(lo_v, hi_v)
    return out
