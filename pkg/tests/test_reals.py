import math
from fractions import Fraction

import pytest

from trim_ergodic.exceptions import InvalidInterval
from trim_ergodic.reals import (
    ExactRational,
    LazyUniformReal,
    QuadraticIrrational,
    parse_real,
    sample_real,
)


def test_same_seed_gives_same_bits():
    assert sample_real(7).window(0, 300) == sample_real(7).window(0, 300)
    assert sample_real(7).window(0, 300) != sample_real(8).window(0, 300)


def test_windows_are_consistent_across_words():
    x = LazyUniformReal(11)
    head, tail = x.window(0, 64), x.window(64, 64)
    assert x.window(0, 128) == (head << 64) | tail
    assert x.window(60, 10) == (x.window(0, 70) & ((1 << 10) - 1))


def test_refinement_does_not_change_earlier_bits():
    x = LazyUniformReal(3)
    before = x.prefix(40)
    x.refine(10_000)
    assert x.refined_len >= 10_000
    assert x.prefix(40) == before


def test_bounds_bracket_the_prefix():
    x = sample_real(5)
    lo, hi = x.bounds(50)
    assert hi - lo == Fraction(1, 2**50)
    assert lo == Fraction(x.prefix(50), 2**50)


def test_bit_array_matches_prefix():
    x = sample_real(12)
    bits = x.bit_array(130)
    assert len(bits) == 130
    assert int("".join(str(b) for b in bits), 2) == x.prefix(130)


def test_exact_rational_window():
    x = ExactRational(Fraction(5, 16))
    assert x.window(0, 4) == 0b0101
    assert x.window(4, 8) == 0
    assert ExactRational(Fraction(7, 3)).exact_value == Fraction(1, 3)


def test_quadratic_irrational_window():
    golden = QuadraticIrrational(-1, 1, 5, 2)
    assert abs(golden.window(0, 40) / 2**40 - (math.sqrt(5) - 1) / 2) < 2**-39
    assert float(golden) == pytest.approx(0.6180339887498949)


def test_quadratic_irrational_normalizes_negative_denominator():
    assert QuadraticIrrational(1, -1, 5, -2).window(0, 60) == QuadraticIrrational(-1, 1, 5, 2).window(0, 60)


def test_quadratic_irrational_rejects_squares():
    with pytest.raises(InvalidInterval, match="perfect square"):
        QuadraticIrrational(0, 1, 4, 1)


def test_parse_real():
    assert parse_real("415/93") == ExactRational(Fraction(415, 93))
    assert parse_real("0.25") == ExactRational(Fraction(1, 4))
    assert parse_real("-1,1,5,2") == QuadraticIrrational(-1, 1, 5, 2)
    with pytest.raises(InvalidInterval):
        parse_real("one half")
