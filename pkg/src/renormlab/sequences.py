"""Solver for the renormalization length sequences d_n, delta_n and alpha.

The defining relations, with d_{-1} = 1 after normalization:

    d_m     = k_{m+2} d_{m+1} + d_{m+2} + (a-1) delta_{m+1}
    delta_m = d_{m+2} + a delta_{m+4}      (even m; delta_m = 0 for odd m)

Two phases run:

1. A Jacobi sweep phase over a fixed window, initialized at the table's
   delta midpoints, with truncated delta sums. Each sweep is asserted to be
   monotone nondecreasing and to obey the per-sweep growth cap
   d^(r+1)/d^(r) <= 1 + 2(a-1)/(k_{n+r+2} k_{n+r+3}). Its level -1 iterates
   form the alpha trace.

2. A certified backward substitution. Five seed coordinates at the top of
   the working window (three d rows, two even delta rows) are enclosed in a
   box: the d seeds by the a-priori bound Delta_m <= alpha d_m <= Delta_m *
   exp(2(a-1)/k_{m+2}), the delta seeds by truncated sums over table rows
   plus a geometric tail majorant. The recurrences are linear with positive
   coefficients, so running them once per unit seed yields coefficient
   vectors; every level is then a dot product and the box maps to exact
   componentwise brackets of the true unnormalized solution.

Delivered values are the all-low corner normalized by its level -1 entry.
They satisfy the relations exactly (the system is homogeneous), which lets
every downstream closed form be checked by exact rational equality. The
per-level error bound err(n) is the exact range of the linear-fractional
quotient d_n/d_{-1} over the seed box, evaluated at the box vertices; the
normalization cancels the common seed scale, so err is far smaller than
the width of the alpha enclosure itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .convergents import ConvergentTable
from .errors import CertificationError, ScheduleError
from .rational import RatInterval, format_rat, rat_to_decimal
from .rlog import exp_lb, exp_ub, log_quotient_enclosure
from .schedules import (
    QuotientSchedule,
    evaluate_schedule,
    k_floor,
    parse_schedule,
    validate_hypotheses,
)


@dataclass(frozen=True)
class TailPolicy:
    """Geometric truncation certificate for the delta sums."""

    guard_bits: int = 128
    terms: int | None = None  # explicit S override; None derives S from guard_bits


@dataclass(frozen=True)
class SolverConfig:
    a: Fraction
    depth: int  # N: levels -1..N are delivered
    iterations: int  # R: Jacobi sweeps
    tail: TailPolicy = field(default_factory=TailPolicy)

    def __post_init__(self) -> None:
        if self.a <= 1:
            raise ScheduleError("slope parameter a must exceed 1")
        if self.depth < 4:
            raise ScheduleError("solver depth must be >= 4")
        if self.iterations < 1:
            raise ScheduleError("at least one sweep is required")


@dataclass(frozen=True)
class SolutionMeta:
    a: Fraction
    depth: int
    iterations: int
    s_terms: int
    guard_bits: int
    window_top: int
    schedule: str


@dataclass(frozen=True)
class SequenceSolution:
    d: dict[int, Fraction]  # n in [-1 .. N]
    delta: dict[int, Fraction]  # even n in [0 .. N]
    alpha: Fraction
    alpha_err: Fraction
    err: dict[int, Fraction]
    meta: SolutionMeta
    alpha_trace: tuple[Fraction, ...]
    # unnormalized bracket runs over the full working window (internal)
    lo_d: dict[int, Fraction] = field(repr=False, default_factory=dict)
    hi_d: dict[int, Fraction] = field(repr=False, default_factory=dict)
    lo_delta: dict[int, Fraction] = field(repr=False, default_factory=dict)
    hi_delta: dict[int, Fraction] = field(repr=False, default_factory=dict)

    @property
    def a(self) -> Fraction:
        return self.meta.a

    def schedule(self) -> QuotientSchedule:
        return parse_schedule(self.meta.schedule)

    def k(self, n: int) -> int:
        return evaluate_schedule(self.schedule(), n)

    def d_interval(self, n: int) -> RatInterval:
        """Certified enclosure of the true normalized d_n."""
        return RatInterval(self.d[n] - self.err[n], self.d[n] + self.err[n])

    def residual_report(self) -> dict[str, Fraction]:
        """Max relation residuals over delivered levels (exact)."""
        worst_even = Fraction(0)
        worst_odd = Fraction(0)
        worst_delta = Fraction(0)
        n_top = self.meta.depth
        for n in range(-1, n_top - 1):
            kk = self.k(n + 2)
            if n % 2 == 0:
                res = abs(self.d[n] - (kk * self.d[n + 1] + self.d[n + 2]))
                worst_even = max(worst_even, res)
            else:
                dl = self.delta.get(n + 1, Fraction(0))
                res = abs(
                    self.d[n]
                    - (kk * self.d[n + 1] + self.d[n + 2] + (self.a - 1) * dl)
                )
                worst_odd = max(worst_odd, res)
        for m in range(0, n_top - 3, 2):
            if m + 4 in self.delta:
                res = abs(self.delta[m] - (self.d[m + 2] + self.a * self.delta[m + 4]))
                worst_delta = max(worst_delta, res)
        return {"even": worst_even, "odd": worst_odd, "delta": worst_delta}

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "d", "err", "delta"])
            for n in range(-1, self.meta.depth + 1):
                writer.writerow(
                    [
                        n,
                        format_rat(self.d[n]),
                        format_rat(self.err[n]),
                        format_rat(self.delta[n]) if n in self.delta else "",
                    ]
                )

    def manifest(self) -> dict:
        return {
            "a": format_rat(self.meta.a),
            "N": self.meta.depth,
            "R": self.meta.iterations,
            "S": self.meta.s_terms,
            "G": self.meta.guard_bits,
            "alpha": format_rat(self.alpha),
            "alpha_err": format_rat(self.alpha_err),
            "alpha_decimal": rat_to_decimal(self.alpha),
            "schedule": self.meta.schedule,
        }


def truncation_terms(a: Fraction, k1: int, guard_bits: int) -> int:
    """Smallest S with a^S / k_1^(4S+2) / (1 - zeta) <= 2^-guard_bits.

    The ratio chain d_{n+2}/d_n < 1/(k_{n+2} k_{n+3}) <= 1/k_1^2 makes the
    dropped delta-tail terms geometric with ratio zeta = a/k_1^4 < 1.
    """
    zeta = Fraction(a, k1**4)
    if zeta >= 1:
        raise CertificationError("tail ratio a/k_1^4 is not contractive")
    target = Fraction(1, 2**guard_bits)
    s = 1
    while Fraction(a**s, k1 ** (4 * s + 2)) / (1 - zeta) > target:
        s += 1
        if s > 4 * guard_bits:
            raise CertificationError("truncation count failed to converge")
    return s


def required_table_depth(cfg: SolverConfig, k1: int) -> tuple[int, int, int]:
    """(S, window top W, minimum table depth) for a config."""
    s = cfg.tail.terms or truncation_terms(cfg.a, k1, cfg.tail.guard_bits)
    w = cfg.depth + 4 * s + 3
    return s, w, w + 4 * s + 7


def _jacobi_phase(
    cfg: SolverConfig, table: ConvergentTable, s_terms: int, window_top: int
) -> tuple[dict[int, Fraction], list[Fraction]]:
    """Sweep phase with monotonicity and growth-cap certificates."""
    a = cfg.a
    sched = table.schedule
    deep_top = window_top + 4 * s_terms - 1  # deepest index an update can read
    d = {n: table.delta_mid(n) for n in range(-1, deep_top + 3)}
    trace = [d[-1]]
    for r in range(cfg.iterations):
        new = dict(d)
        for n in range(-1, window_top + 1):
            kk = k_floor(sched, n + 2)
            if n % 2 == 1:
                part = sum(a**s * d[n + 3 + 4 * s] for s in range(s_terms))
            else:
                part = Fraction(0)
            val = kk * d[n + 1] + d[n + 2] + (a - 1) * part
            if val < d[n]:
                raise CertificationError(f"sweep {r} broke monotonicity at level {n}")
            cap = 1 + Fraction(2) * (a - 1) / (
                k_floor(sched, n + r + 2) * k_floor(sched, n + r + 3)
            )
            if val > d[n] * cap:
                raise CertificationError(
                    f"sweep {r} exceeded the growth cap at level {n}"
                )
            new[n] = val
        d = new
        trace.append(d[-1])
    return d, trace


@dataclass(frozen=True)
class _SeedBox:
    """Seed coordinates: three top d rows then two even delta rows."""

    d_rows: tuple[int, int, int]
    delta_rows: tuple[int, int]
    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]


def _seed_box(
    cfg: SolverConfig, table: ConvergentTable, s_terms: int, window_top: int
) -> _SeedBox:
    a = cfg.a
    sched = table.schedule
    w = window_top
    zeta = Fraction(a, k_floor(sched, 1) ** 4)
    if zeta >= 1:
        raise CertificationError("delta tail is not geometrically dominated")
    e_uniform = exp_ub(2 * (a - 1) / Fraction(k_floor(sched, 1)))

    d_rows = (w + 1, w + 2, w + 3)
    delta_rows = tuple(m for m in range(w + 2, w + 6) if m % 2 == 0)
    assert len(delta_rows) == 2

    lo: list[Fraction] = []
    hi: list[Fraction] = []
    for j in d_rows:
        iv = table.delta(j)
        lo.append(iv.lo)
        hi.append(iv.hi * exp_ub(2 * (a - 1) / k_floor(sched, j + 2)))
    for m in delta_rows:
        lo_sum = Fraction(0)
        hi_sum = Fraction(0)
        for s in range(s_terms):
            row = table.delta(m + 4 * s + 2)
            lo_sum += a**s * row.lo
            hi_sum += a**s * row.hi * exp_ub(
                2 * (a - 1) / k_floor(sched, m + 4 * s + 4)
            )
        lead = a**s_terms * table.delta(m + 4 * s_terms + 2).hi * e_uniform
        hi_sum += lead / (1 - zeta)
        lo.append(lo_sum)
        hi.append(hi_sum)
    return _SeedBox(d_rows, tuple(delta_rows), tuple(lo), tuple(hi))


def _unit_runs(
    cfg: SolverConfig, sched: QuotientSchedule, box: _SeedBox, window_top: int
) -> tuple[list[dict[int, Fraction]], list[dict[int, Fraction]]]:
    """Coefficient vectors: one backward run per unit seed coordinate."""
    a = cfg.a
    w = window_top
    d_coeff: list[dict[int, Fraction]] = []
    delta_coeff: list[dict[int, Fraction]] = []
    n_coords = len(box.lo)
    for idx in range(n_coords):
        d: dict[int, Fraction] = {j: Fraction(0) for j in box.d_rows}
        deltas: dict[int, Fraction] = {m: Fraction(0) for m in box.delta_rows}
        if idx < 3:
            d[box.d_rows[idx]] = Fraction(1)
        else:
            deltas[box.delta_rows[idx - 3]] = Fraction(1)
        for n in range(w, -2, -1):
            if n % 2 == 1:
                deltas[n + 1] = d[n + 3] + a * deltas[n + 5]
            part = deltas.get(n + 1, Fraction(0))
            d[n] = k_floor(sched, n + 2) * d[n + 1] + d[n + 2] + (a - 1) * part
        d_coeff.append(d)
        delta_coeff.append(deltas)
    return d_coeff, delta_coeff


def solve_fixed_point(cfg: SolverConfig, table: ConvergentTable) -> SequenceSolution:
    """Run both phases and deliver certified normalized sequences."""
    sched = table.schedule
    gate = validate_hypotheses(sched, cfg.a)
    if not gate.passed:
        raise ScheduleError("hypothesis gate failed: " + ", ".join(gate.failed_names()))
    k1 = k_floor(sched, 1)
    s_terms, window_top, need = required_table_depth(cfg, k1)
    if table.depth < need:
        raise ScheduleError(
            f"table depth {table.depth} too small: depth >= {need} required "
            f"(N={cfg.depth}, S={s_terms}, W={window_top})"
        )

    jacobi, trace = _jacobi_phase(cfg, table, s_terms, window_top)

    box = _seed_box(cfg, table, s_terms, window_top)
    d_coeff, delta_coeff = _unit_runs(cfg, sched, box, window_top)

    def dot(
        coeffs: list[dict[int, Fraction]], n: int, seed: tuple[Fraction, ...]
    ) -> Fraction:
        return sum(c[n] * s for c, s in zip(coeffs, seed))

    lo_d = {n: dot(d_coeff, n, box.lo) for n in range(-1, window_top + 4)}
    hi_d = {n: dot(d_coeff, n, box.hi) for n in range(-1, window_top + 4)}
    lo_delta = {
        m: dot(delta_coeff, m, box.lo) for m in range(0, window_top + 2) if m % 2 == 0
    }
    hi_delta = {
        m: dot(delta_coeff, m, box.hi) for m in range(0, window_top + 2) if m % 2 == 0
    }

    for n in range(-1, window_top + 1):
        if not 0 < lo_d[n] <= hi_d[n]:
            raise CertificationError(f"bracket runs crossed at level {n}")
        if not table.delta(n).lo <= jacobi[n] <= hi_d[n]:
            # the sweeps climb from the table midpoints toward the fixed
            # point; escaping the high bracket would mean a bad certificate
            raise CertificationError(f"sweep values escaped the bracket at level {n}")

    alpha = lo_d[-1]
    alpha_err = hi_d[-1] - lo_d[-1]
    if not alpha > 1:
        raise CertificationError("normalization constant failed the alpha > 1 bound")

    # exact range of d_n/d_{-1} over the seed box: a quotient of positive
    # linear forms is quasilinear, so its extremes sit at box vertices
    n_top = cfg.depth
    err: dict[int, Fraction] = {}
    corners = list(product(*((lo, hi) for lo, hi in zip(box.lo, box.hi))))
    denom_at = [dot(d_coeff, -1, corner) for corner in corners]
    for n in range(-1, n_top + 1):
        vals = [
            dot(d_coeff, n, corner) / den for corner, den in zip(corners, denom_at)
        ]
        err[n] = max(vals) - min(vals)

    d_out = {n: lo_d[n] / alpha for n in range(-1, n_top + 1)}
    delta_out = {m: lo_delta[m] / alpha for m in range(0, n_top + 1) if m % 2 == 0}
    assert d_out[-1] == 1
    assert err[-1] == 0
    for n in range(-1, n_top):
        assert 0 < d_out[n + 1] < d_out[n], "d must be positive strictly decreasing"

    meta = SolutionMeta(
        a=cfg.a,
        depth=cfg.depth,
        iterations=cfg.iterations,
        s_terms=s_terms,
        guard_bits=cfg.tail.guard_bits,
        window_top=window_top,
        schedule=sched.label,
    )
    return SequenceSolution(
        d=d_out,
        delta=delta_out,
        alpha=alpha,
        alpha_err=alpha_err,
        err=err,
        meta=meta,
        alpha_trace=tuple(trace),
        lo_d=lo_d,
        hi_d=hi_d,
        lo_delta=lo_delta,
        hi_delta=hi_delta,
    )


def alpha(sol: SequenceSolution) -> tuple[Fraction, Fraction]:
    """(alpha, certified error bound); alpha > 1 is part of the contract."""
    return sol.alpha, sol.alpha_err


# --------------------------------------------------------------------------
# inequality verification


@dataclass(frozen=True)
class InequalityRow:
    name: str
    n: int
    verdict: str  # "pass" | "fail" | "indeterminate"
    slack: Fraction
    detail: str


@dataclass(frozen=True)
class InequalityReport:
    rows: tuple[InequalityRow, ...]

    @property
    def all_pass(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)

    def by_name(self, name: str) -> list[InequalityRow]:
        return [r for r in self.rows if r.name == name]

    def to_json(self) -> list[dict]:
        return [
            {
                "name": r.name,
                "n": r.n,
                "verdict": r.verdict,
                "slack": format_rat(r.slack),
                "detail": r.detail,
            }
            for r in self.rows
        ]


def verify_inequalities(
    sol: SequenceSolution, table: ConvergentTable
) -> InequalityReport:
    """Per-level certified verdicts for the standing inequalities."""
    if sol.meta.schedule != table.schedule.label:
        raise CertificationError("solution and table come from different schedules")
    a = sol.a
    sched = table.schedule
    rows: list[InequalityRow] = []
    n_top = sol.meta.depth

    for n in range(-1, n_top + 1):
        dlo, dhi = sol.lo_d[n], sol.hi_d[n]
        div = table.delta(n)
        bound = 2 * (a - 1) / Fraction(k_floor(sched, n + 2))
        # lower side: log(alpha d_n / Delta_n) >= 0, i.e. alpha d_n >= Delta_n
        if dlo >= div.hi:
            low_verdict, low_slack = "pass", dlo - div.hi
        elif dhi < div.lo:
            low_verdict, low_slack = "fail", dlo - div.hi
        else:
            low_verdict, low_slack = "indeterminate", Fraction(0)
        rows.append(
            InequalityRow(
                "log_ratio_lower",
                n,
                low_verdict,
                low_slack,
                "alpha*d_n >= Delta_n certified" if low_verdict == "pass" else "",
            )
        )
        # upper side: log(alpha d_n / Delta_n) < 2(a-1)/k_{n+2}
        gate = div.lo * exp_lb(bound)
        if dhi < gate:
            up_verdict, up_slack = "pass", gate - dhi
        elif dlo >= div.hi * exp_ub(bound):
            up_verdict, up_slack = "fail", gate - dhi
        else:
            up_verdict, up_slack = "indeterminate", Fraction(0)
        gap = log_quotient_enclosure(RatInterval(dlo, dhi), div)
        rows.append(
            InequalityRow(
                "log_ratio_upper",
                n,
                up_verdict,
                up_slack,
                f"log gap in [{rat_to_decimal(gap.lo, 8)}, {rat_to_decimal(gap.hi, 8)}]"
                f", cap {rat_to_decimal(bound, 8)}",
            )
        )

    # quotient inequalities cancel the overall scale, so the tight
    # normalized values with their vertex-certified errors decide them
    for n in range(-1, n_top - 1):
        kk = k_floor(sched, n + 2) * k_floor(sched, n + 3)
        lhs = (sol.d[n + 2] + sol.err[n + 2]) * kk
        rhs = sol.d[n] - sol.err[n]
        if lhs < rhs:
            verdict = "pass"
        elif (sol.d[n + 2] - sol.err[n + 2]) * kk >= sol.d[n] + sol.err[n]:
            verdict = "fail"
        else:
            verdict = "indeterminate"
        rows.append(
            InequalityRow(
                "two_step_ratio",
                n,
                verdict,
                rhs - lhs,
                f"d_(n+2)/d_n against 1/({k_floor(sched, n + 2)}*{k_floor(sched, n + 3)})",
            )
        )

    for m in range(0, n_top + 1, 2):
        kk = k_floor(sched, m + 2) * k_floor(sched, m + 3)
        lhs = sol.hi_delta[m] * kk
        rhs = 2 * sol.lo_d[m]
        if lhs < rhs:
            verdict = "pass"
        elif sol.lo_delta[m] * kk < 2 * sol.hi_d[m]:
            verdict = "indeterminate"
        else:
            verdict = "fail"
        rows.append(
            InequalityRow(
                "delta_ratio",
                m,
                verdict,
                rhs - lhs,
                "delta_m/d_m against 2/(k_{m+2} k_{m+3})",
            )
        )

    # seed-level sums: truncated delta sums over table rows obey the same cap
    zeta = Fraction(a, k_floor(sched, 1) ** 4)
    s_terms = sol.meta.s_terms
    for m in range(0, n_top + 1, 2):
        lo_sum = sum(a**s * table.delta(m + 4 * s + 2).lo for s in range(s_terms))
        hi_sum = sum(a**s * table.delta(m + 4 * s + 2).hi for s in range(s_terms))
        hi_sum += a**s_terms * table.delta(m + 4 * s_terms + 2).hi / (1 - zeta)
        kk = k_floor(sched, m + 2) * k_floor(sched, m + 3)
        div = table.delta(m)
        if hi_sum * kk < 2 * div.lo:
            verdict = "pass"
        elif lo_sum * kk < 2 * div.hi:
            verdict = "indeterminate"
        else:
            verdict = "fail"
        rows.append(
            InequalityRow(
                "delta_seed_ratio",
                m,
                verdict,
                2 * div.lo - hi_sum * kk,
                "truncated delta sum over Delta rows against 2/(k_{m+2} k_{m+3})",
            )
        )

    return InequalityReport(rows=tuple(rows))


def solve_schedule(
    sched: QuotientSchedule,
    a: Fraction | int,
    depth: int = 10,
    iterations: int = 20,
    guard_bits: int = 128,
    table: ConvergentTable | None = None,
) -> tuple[ConvergentTable, SequenceSolution]:
    """Convenience: build a table deep enough for the config and solve."""
    from .convergents import build_convergents

    cfg = SolverConfig(
        a=Fraction(a),
        depth=depth,
        iterations=iterations,
        tail=TailPolicy(guard_bits=guard_bits),
    )
    k1 = k_floor(sched, 1)
    _, _, need = required_table_depth(cfg, k1)
    if table is None or table.depth < need:
        table = build_convergents(sched, need)
    return table, solve_fixed_point(cfg, table)
