"""Exact rational scalars and closed rational intervals.

Everything downstream of this module computes with `fractions.Fraction`;
floats never enter certified paths. The interval type is a frozen pair
[lo, hi] with lo <= hi enforced at construction, plus the handful of
monotone operations the solvers need. Decimal rendering is done with
integer arithmetic so CSV output is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import CertificationError

Rat = Fraction


def rat(value: int | str | Fraction, den: int | None = None) -> Fraction:
    """Build an exact rational from an int, a 'p/q' string, or a pair."""
    if den is not None:
        return Fraction(value, den)  # type: ignore[arg-type]
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot build rational from {type(value).__name__}")


def format_rat(x: Fraction) -> str:
    """Canonical 'p/q' form, 'p' when the denominator is 1."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rat_to_decimal(x: Fraction, digits: int = 30) -> str:
    """Round-half-even decimal string with `digits` significant digits.

    Pure integer arithmetic: scale the fraction so the integer part has
    exactly `digits` digits, divide with remainder, round half to even.
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    if x == 0:
        return "0." + "0" * (digits - 1)
    sign = "-" if x < 0 else ""
    p, q = abs(x.numerator), x.denominator
    # exponent e with 10^(e-1) <= p/q < 10^e
    e = len(str(p)) - len(str(q)) + 1
    while p * 10 ** max(0, -e + 1) < q * 10 ** max(0, e - 1):
        e -= 1
    while p * 10 ** max(0, -e) >= q * 10 ** max(0, e):
        e += 1
    # mantissa m = round(p/q * 10^(digits-e)) with digits digits
    shift = digits - e
    if shift >= 0:
        num, den = p * 10**shift, q
    else:
        num, den = p, q * 10**-shift
    m, r = divmod(num, den)
    if 2 * r > den or (2 * r == den and m % 2 == 1):
        m += 1
    ms = str(m)
    if len(ms) == digits + 1:  # rounding carried over a power of ten
        e += 1
        ms = ms[:digits]
    assert len(ms) == digits
    if 0 < e <= digits:
        out = ms[:e] + "." + ms[e:] if e < digits else ms
    elif e <= 0:
        out = "0." + "0" * (-e) + ms
    else:
        out = ms + "e+" + str(e - digits)
    return sign + out


@dataclass(frozen=True, slots=True)
class RatInterval:
    """Closed interval [lo, hi] of exact rationals."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise CertificationError(
                f"empty interval: lo={format_rat(self.lo)} > hi={format_rat(self.hi)}"
            )

    @staticmethod
    def point(x: Fraction) -> "RatInterval":
        return RatInterval(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def encloses(self, other: "RatInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __add__(self, other: "RatInterval | Fraction | int") -> "RatInterval":
        if isinstance(other, RatInterval):
            return RatInterval(self.lo + other.lo, self.hi + other.hi)
        return RatInterval(self.lo + other, self.hi + other)

    def __sub__(self, other: "RatInterval | Fraction | int") -> "RatInterval":
        if isinstance(other, RatInterval):
            return RatInterval(self.lo - other.hi, self.hi - other.lo)
        return RatInterval(self.lo - other, self.hi - other)

    def __mul__(self, other: "RatInterval | Fraction | int") -> "RatInterval":
        if isinstance(other, RatInterval):
            prods = (
                self.lo * other.lo,
                self.lo * other.hi,
                self.hi * other.lo,
                self.hi * other.hi,
            )
            return RatInterval(min(prods), max(prods))
        if other >= 0:
            return RatInterval(self.lo * other, self.hi * other)
        return RatInterval(self.hi * other, self.lo * other)

    __rmul__ = __mul__

    def divided_by(self, other: "RatInterval") -> "RatInterval":
        """Quotient, requiring the divisor to be strictly positive."""
        if other.lo <= 0:
            raise CertificationError("interval division by non-positive divisor")
        return RatInterval(self.lo / other.hi, self.hi / other.lo)

    def to_json(self) -> dict[str, str]:
        return {"lo": format_rat(self.lo), "hi": format_rat(self.hi)}

    @staticmethod
    def from_json(obj: dict[str, str]) -> "RatInterval":
        return RatInterval(rat(obj["lo"]), rat(obj["hi"]))


def hull(a: Fraction, b: Fraction) -> RatInterval:
    """Interval spanned by two points in either order."""
    a, b = Fraction(a), Fraction(b)
    return RatInterval(a, b) if a <= b else RatInterval(b, a)
