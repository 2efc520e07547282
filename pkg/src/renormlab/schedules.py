"""Partial-quotient schedules and their standing-hypothesis gate.

A schedule assigns a positive integer k_n to every level n >= 1. Two kinds
are supported: integer-coefficient polynomials in n (closed form, so strict
growth and series convergence are decidable) and explicit finite lists
(checkable as far as they go, convergence left open). Arbitrary callables
are deliberately excluded.

Config syntax accepted by `parse_schedule`:

    "poly:(n+5)^2"      binomial shorthand
    "poly:25,10,1"      coefficients c0,c1,c2 of c0 + c1*n + c2*n^2
    "list:5,7,11"       explicit values k_1, k_2, k_3
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .errors import ScheduleError
from .rational import format_rat

_POLY_POW = re.compile(r"^\(\s*n\s*([+-]\s*\d+)\s*\)\s*\^\s*(\d+)$")


def _expand_binomial(shift: int, power: int) -> tuple[int, ...]:
    """Coefficients of (n + shift)^power, lowest degree first."""
    return tuple(comb(power, j) * shift ** (power - j) for j in range(power + 1))


@dataclass(frozen=True)
class QuotientSchedule:
    """Closed-form or explicit-list schedule of partial quotients."""

    kind: str  # "poly" | "list"
    coeffs: tuple[int, ...] = ()  # poly only; c0 + c1*n + ...
    entries: tuple[int, ...] = ()  # list only; k_1, k_2, ...
    a_hint: Fraction = Fraction(2)
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.kind == "poly":
            if not self.coeffs or self.coeffs[-1] == 0 and len(self.coeffs) > 1:
                raise ScheduleError("polynomial schedule needs a nonzero leading coefficient")
        elif self.kind == "list":
            if not self.entries:
                raise ScheduleError("explicit schedule list is empty")
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if not self.label:
            object.__setattr__(self, "label", describe_schedule(self))

    @property
    def max_depth(self) -> int | None:
        """Deepest n with a defined k_n; None when unbounded."""
        return len(self.entries) if self.kind == "list" else None

    def degree(self) -> int:
        if self.kind != "poly":
            raise ScheduleError("degree is defined for polynomial schedules only")
        return len(self.coeffs) - 1


def describe_schedule(sched: QuotientSchedule) -> str:
    if sched.kind == "list":
        return "list:" + ",".join(str(v) for v in sched.entries)
    return "poly:" + ",".join(str(c) for c in sched.coeffs)


def parse_schedule(text: str, a_hint: Fraction | int = 2) -> QuotientSchedule:
    """Parse the config syntax documented in the module docstring."""
    a = Fraction(a_hint)
    kind, _, body = text.strip().partition(":")
    body = body.strip()
    if kind == "poly":
        m = _POLY_POW.match(body)
        if m:
            shift = int(m.group(1).replace(" ", ""))
            power = int(m.group(2))
            return QuotientSchedule("poly", coeffs=_expand_binomial(shift, power), a_hint=a)
        try:
            coeffs = tuple(int(tok) for tok in body.split(","))
        except ValueError as exc:
            raise ScheduleError(f"cannot parse polynomial schedule {text!r}") from exc
        return QuotientSchedule("poly", coeffs=coeffs, a_hint=a)
    if kind == "list":
        try:
            entries = tuple(int(tok) for tok in body.split(","))
        except ValueError as exc:
            raise ScheduleError(f"cannot parse list schedule {text!r}") from exc
        return QuotientSchedule("list", entries=entries, a_hint=a)
    raise ScheduleError(f"schedule must start with 'poly:' or 'list:', got {text!r}")


def evaluate_schedule(sched: QuotientSchedule, n: int) -> int:
    """k_n for n >= 1; range error past the end of an explicit list."""
    if n < 1:
        raise ScheduleError(f"schedule level must be >= 1, got {n}")
    if sched.kind == "list":
        if n > len(sched.entries):
            raise ScheduleError(
                f"explicit schedule has {len(sched.entries)} entries, level {n} requested"
            )
        value = sched.entries[n - 1]
    else:
        value = sum(c * n**j for j, c in enumerate(sched.coeffs))
    if value < 1:
        raise ScheduleError(f"schedule value k_{n} = {value} is not a positive integer")
    return value


def k_floor(sched: QuotientSchedule, n: int) -> int:
    """A certified lower bound on k_n, defined for every n >= 1.

    Polynomials evaluate exactly. Explicit lists are extended past their
    last entry L by k_L + (n - L), which underestimates any continuation
    that keeps the strictly-increasing hypothesis. Used by tail bounds only.
    """
    if n < 1:
        raise ScheduleError(f"schedule level must be >= 1, got {n}")
    if sched.kind == "poly" or n <= len(sched.entries):
        return evaluate_schedule(sched, n)
    last = len(sched.entries)
    return sched.entries[-1] + (n - last)


def _poly_strictly_increasing(coeffs: tuple[int, ...]) -> bool:
    """Decide k(n+1) > k(n) for all integers n >= 1, exactly.

    The difference D(n) = k(n+1) - k(n) is a polynomial with integer
    coefficients. Beyond the Cauchy root bound every value has the sign of
    the leading coefficient; below it we check integers directly.
    """
    # D coefficients: k(n+1) expanded minus k(n)
    deg = len(coeffs) - 1
    diff = [0] * (deg + 1)
    for j, c in enumerate(coeffs):
        for t in range(j + 1):
            diff[t] += c * comb(j, t)
        diff[j] -= c
    while diff and diff[-1] == 0:
        diff.pop()
    if not diff:
        return False  # constant schedule
    lead = diff[-1]
    if len(diff) == 1:
        return lead > 0
    if lead < 0:
        return False
    bound = 1 + max(abs(c) for c in diff[:-1]) // abs(lead) + 1
    return all(
        sum(c * n**j for j, c in enumerate(diff)) > 0 for n in range(1, bound + 1)
    )


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    schedule: str
    a: Fraction
    checks: tuple[HypothesisCheck, ...]
    warnings: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)

    def to_json(self) -> dict:
        return {
            "schedule": self.schedule,
            "a": format_rat(self.a),
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "warnings": list(self.warnings),
        }


def validate_hypotheses(sched: QuotientSchedule, a: Fraction | int) -> ValidationReport:
    """Gate the standing hypotheses: k_1 >= 5, k_1 >= 2a, strict growth,
    and a convergence certificate for the reciprocal series."""
    a = Fraction(a)
    if a <= 1:
        raise ScheduleError(f"break size a must exceed 1, got {format_rat(a)}")
    checks: list[HypothesisCheck] = []
    warnings: list[str] = []

    k1 = evaluate_schedule(sched, 1)
    checks.append(
        HypothesisCheck("k1_at_least_5", k1 >= 5, f"k_1 = {k1}, bound 5")
    )
    checks.append(
        HypothesisCheck(
            "k1_at_least_2a", Fraction(k1) >= 2 * a, f"k_1 = {k1}, 2a = {format_rat(2 * a)}"
        )
    )

    if sched.kind == "poly":
        increasing = _poly_strictly_increasing(sched.coeffs)
        detail = "polynomial difference positive for all n >= 1" if increasing else (
            "polynomial is not strictly increasing over n >= 1"
        )
        checks.append(HypothesisCheck("strictly_increasing", increasing, detail))
        deg = sched.degree()
        convergent = deg >= 2 and sched.coeffs[-1] > 0
        detail = (
            f"degree {deg} >= 2 certifies a convergent reciprocal series"
            if convergent
            else f"degree {deg} polynomial: reciprocal series not summable (or not certified)"
        )
        checks.append(HypothesisCheck("reciprocal_series_converges", convergent, detail))
    else:
        pairs = zip(sched.entries, sched.entries[1:])
        increasing = all(u < v for u, v in pairs)
        checks.append(
            HypothesisCheck(
                "strictly_increasing",
                increasing,
                "all consecutive entries increase" if increasing else "non-increasing entry found",
            )
        )
        warnings.append(
            f"finite list of {len(sched.entries)} entries - convergence unverifiable; "
            "certified depth is restricted to the list length"
        )

    return ValidationReport(
        schedule=sched.label, a=a, checks=tuple(checks), warnings=tuple(warnings)
    )
