"""Exact scalar/interval layer and the certified log/exp enclosures."""

from fractions import Fraction

import pytest

from renormlab import RatInterval, format_rat, hull, rat_to_decimal
from renormlab.errors import CertificationError
from renormlab.rational import rat
from renormlab.rlog import exp_enclosure, log_quotient_enclosure

# reference constants, truncated at 50 significant digits; the enclosures
# are far tighter than the truncation, so containment is asserted up to
# the truncation error
E_50 = Fraction("2.7182818284590452353602874713526624977572470936999")
LN2_50 = Fraction("0.69314718055994530941723212145817656807550013436025")
TRUNC = Fraction(1, 10**45)


def test_rat_parsing_forms():
    assert rat(3) == Fraction(3)
    assert rat("7/2") == Fraction(7, 2)
    assert rat(" -5/3 ") == Fraction(-5, 3)
    assert rat(Fraction(1, 4)) == Fraction(1, 4)
    assert rat(3, 7) == Fraction(3, 7)
    with pytest.raises(TypeError):
        rat(1.5)


def test_format_rat_canonical():
    assert format_rat(Fraction(3)) == "3"
    assert format_rat(Fraction(-7, 2)) == "-7/2"
    assert rat(format_rat(Fraction(355, 113))) == Fraction(355, 113)


def test_rat_to_decimal_known_values():
    assert rat_to_decimal(Fraction(1, 3), 5) == "0.33333"
    assert rat_to_decimal(Fraction(2, 3), 5) == "0.66667"
    assert rat_to_decimal(Fraction(1), 4) == "1.000"
    assert rat_to_decimal(Fraction(0), 3) == "0.00"
    assert rat_to_decimal(Fraction(-1, 8), 3) == "-0.125"


def test_rat_to_decimal_round_half_even():
    # ties go to the even mantissa
    assert rat_to_decimal(Fraction(1, 8), 2) == "0.12"
    assert rat_to_decimal(Fraction(3, 8), 2) == "0.38"


def test_rat_to_decimal_scaling():
    # values larger than the digit budget switch to exponent form
    assert rat_to_decimal(Fraction(12345, 1), 3) == "123e+2"
    assert rat_to_decimal(Fraction(1, 10**9), 4) == "0.000000001000"
    assert rat_to_decimal(Fraction(98765, 1), 8) == "98765.000"


def test_interval_construction_and_accessors():
    iv = RatInterval(Fraction(1, 3), Fraction(1, 2))
    assert iv.width == Fraction(1, 6)
    assert iv.mid == Fraction(5, 12)
    with pytest.raises(CertificationError):
        RatInterval(Fraction(1), Fraction(0))


def test_interval_point_and_hull():
    p = RatInterval.point(Fraction(2, 7))
    assert p.lo == p.hi == Fraction(2, 7)
    h = hull(Fraction(1, 2), Fraction(-1, 3))
    assert h.lo == Fraction(-1, 3) and h.hi == Fraction(1, 2)


def test_exp_enclosure_contains_reference():
    iv = exp_enclosure(Fraction(1))
    assert iv.lo - TRUNC <= E_50 <= iv.hi + TRUNC
    assert iv.width < Fraction(1, 10**20)


def test_exp_enclosure_negative_and_zero():
    iv = exp_enclosure(Fraction(-1))
    assert iv.lo - TRUNC <= 1 / E_50 <= iv.hi + TRUNC
    one = exp_enclosure(Fraction(0))
    assert one.lo <= 1 <= one.hi


def test_exp_enclosure_rejects_large_arguments():
    with pytest.raises(CertificationError):
        exp_enclosure(Fraction(5, 2))


def test_exp_enclosure_huge_denominator_rounds_first():
    # arguments with enormous bit size must still give tight enclosures
    x = Fraction(1, 3) + Fraction(1, 10**500)
    iv = exp_enclosure(x)
    ref = exp_enclosure(Fraction(1, 3))
    assert iv.lo <= ref.hi and ref.lo <= iv.hi
    assert iv.width < Fraction(1, 10**20)


def test_log_quotient_contains_ln2():
    num = RatInterval.point(Fraction(2))
    den = RatInterval.point(Fraction(1))
    iv = log_quotient_enclosure(num, den)
    assert iv.lo - TRUNC <= LN2_50 <= iv.hi + TRUNC
    assert iv.width < Fraction(1, 10**20)


def test_log_quotient_sign_and_inverse_symmetry():
    two = RatInterval.point(Fraction(2))
    half = RatInterval.point(Fraction(1, 2))
    one = RatInterval.point(Fraction(1))
    up = log_quotient_enclosure(two, one)
    down = log_quotient_enclosure(half, one)
    assert up.lo > 0 and down.hi < 0
    assert up.lo + down.hi <= 0 <= up.hi + down.lo


def test_log_exp_round_trip():
    x = Fraction(3, 7)
    ex = exp_enclosure(x)
    back = log_quotient_enclosure(ex, RatInterval.point(Fraction(1)))
    assert back.lo <= x <= back.hi
