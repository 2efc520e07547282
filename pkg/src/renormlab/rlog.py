"""Certified enclosures for log and exp over exact rationals.

All results are RatInterval values guaranteed to contain the true real
number. Strategy:

  log x: write x = m * 2^e with m in [3/4, 3/2), set z = (m-1)/(m+1)
         (so |z| <= 1/5), and use log m = 2*atanh(z) with the odd series
         and the geometric tail bound 2|z|^(2K+3) / ((2K+3)(1 - z^2)).
         log 2 = 2*atanh(1/3) is computed once per precision and cached.

  exp x: plain Taylor series for 0 <= x <= 2 with the standard factorial
         tail bound; negative arguments go through 1/exp(-x).

Inputs with huge numerators are pre-rounded to dyadics with interval
slack so series work stays polynomial in the requested precision.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import CertificationError
from .rational import RatInterval

_LN2_CACHE: dict[int, RatInterval] = {}

#: default guard precision (bits) for enclosures
DEFAULT_PREC = 192


def _dyadic_enclose(x: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Dyadic lo <= x <= hi with denominators 2^bits."""
    scale = 1 << bits
    n = x.numerator * scale
    lo_num = n // x.denominator
    lo = Fraction(lo_num, scale)
    hi = lo if lo_num * x.denominator == n else Fraction(lo_num + 1, scale)
    return lo, hi


def _atanh_enclosure(z: Fraction, prec: int) -> RatInterval:
    """Enclosure of atanh(z) for |z| < 1/2 via the odd power series."""
    if abs(z) >= Fraction(1, 2):
        raise CertificationError("atanh series restricted to |z| < 1/2")
    if z == 0:
        return RatInterval.point(Fraction(0))
    target = Fraction(1, 1 << (prec + 4))
    z2 = z * z
    term = z  # z^(2k+1)
    total = Fraction(0)
    k = 0
    while True:
        total += term / (2 * k + 1)
        term *= z2
        k += 1
        # tail bound: sum_{j>=k} |z|^(2j+1)/(2j+1) <= |z|^(2k+1)/((2k+1)(1-z^2))
        tail = abs(term) / ((2 * k + 1) * (1 - z2))
        if tail <= target:
            return RatInterval(total - tail, total + tail)
        if k > 4 * prec:
            raise CertificationError("atanh series failed to converge")


def _ln2(prec: int) -> RatInterval:
    iv = _LN2_CACHE.get(prec)
    if iv is None:
        iv = 2 * _atanh_enclosure(Fraction(1, 3), prec + 8)
        _LN2_CACHE[prec] = iv
    return iv


def log_enclosure(x: Fraction, prec: int = DEFAULT_PREC) -> RatInterval:
    """Certified enclosure of the natural log of a positive rational."""
    if x <= 0:
        raise CertificationError("log of non-positive value")
    if x == 1:
        return RatInterval.point(Fraction(0))
    # binary exponent e with x / 2^e in [3/4, 3/2)
    e = x.numerator.bit_length() - x.denominator.bit_length()
    m = x / Fraction(2) ** e
    if m < Fraction(3, 4):
        e -= 1
        m *= 2
    elif m >= Fraction(3, 2):
        e += 1
        m /= 2
    assert Fraction(3, 4) <= m < Fraction(3, 2)
    z = (m - 1) / (m + 1)  # in (-1/7, 1/5)
    # pre-round so series powers stay small
    if z.numerator.bit_length() + z.denominator.bit_length() > prec + 64:
        zlo, zhi = _dyadic_enclose(z, prec + 32)
        lo_iv = _atanh_enclosure(zlo, prec)
        hi_iv = _atanh_enclosure(zhi, prec)
        at = RatInterval(lo_iv.lo, hi_iv.hi)  # atanh is increasing
    else:
        at = _atanh_enclosure(z, prec)
    return 2 * at + e * _ln2(prec)


def _exp_core(x: Fraction, prec: int) -> RatInterval:
    """Taylor enclosure of exp(x) for 0 <= x <= 2."""
    target = Fraction(1, 1 << (prec + 4))
    term = Fraction(1)
    total = Fraction(0)
    k = 0
    while True:
        total += term
        k += 1
        term = term * x / k
        # tail: sum_{j>=k} x^j/j! <= (x^k/k!) / (1 - x/(k+1)) once x < k+1
        if x < k + 1:
            tail = term / (1 - x / (k + 1))
            if tail <= target:
                return RatInterval(total, total + tail)
        if k > 8 * prec + 64:
            raise CertificationError("exp series failed to converge")


def _exp_signed(x: Fraction, prec: int) -> RatInterval:
    if x == 0:
        return RatInterval.point(Fraction(1))
    if x > 0:
        return _exp_core(x, prec)
    pos = _exp_core(-x, prec)
    return RatInterval(1 / pos.hi, 1 / pos.lo)


def exp_enclosure(x: Fraction, prec: int = DEFAULT_PREC) -> RatInterval:
    """Certified enclosure of exp(x) for rational |x| <= 2."""
    if abs(x) > 2:
        raise CertificationError("exp enclosure restricted to |x| <= 2")
    if x.numerator.bit_length() + x.denominator.bit_length() > prec + 64:
        # pre-round once; the dyadic endpoints go straight to the series
        xlo, xhi = _dyadic_enclose(x, prec + 32)
        return RatInterval(_exp_signed(xlo, prec).lo, _exp_signed(xhi, prec).hi)
    return _exp_signed(x, prec)


def exp_ub(x: Fraction, prec: int = DEFAULT_PREC) -> Fraction:
    """A rational certified >= exp(x)."""
    return exp_enclosure(x, prec).hi


def exp_lb(x: Fraction, prec: int = DEFAULT_PREC) -> Fraction:
    """A rational certified <= exp(x)."""
    return exp_enclosure(x, prec).lo


def log_quotient_enclosure(
    num: RatInterval, den: RatInterval, prec: int = DEFAULT_PREC
) -> RatInterval:
    """Enclosure of log(num/den) from positive interval operands."""
    if num.lo <= 0 or den.lo <= 0:
        raise CertificationError("log quotient needs strictly positive operands")
    q = num.divided_by(den)
    lo = log_enclosure(q.lo, prec).lo
    hi = log_enclosure(q.hi, prec).hi
    return RatInterval(lo, hi)
