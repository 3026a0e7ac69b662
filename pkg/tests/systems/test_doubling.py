import itertools
from collections import Counter
from fractions import Fraction

import pytest

from trim_ergodic.exceptions import InvalidSymbol, OrbitTerminated
from trim_ergodic.reals import ExactRational, sample_real
from trim_ergodic.systems.base import validate_system
from trim_ergodic.systems.doubling import (
    ReciprocalPartition,
    doubling_orbit,
    doubling_reciprocal_system,
    doubling_system,
    dyadic_partition,
    dyadic_word_measure,
    harmonic,
    interval_word_measure,
    preimage_overlap,
)


def brute_force_overlap(first, n, second):
    """mu(I ∩ T^-n J) by listing the 2^n branches of T^-n J."""
    lo, hi = first
    a, b = second
    scale = 2**n
    total = Fraction(0)
    for k in range(scale):
        left, right = max(lo, (k + a) / scale), min(hi, (k + b) / scale)
        if left < right:
            total += right - left
    return total


@pytest.mark.parametrize(
    ("x", "expected"),
    [(Fraction(5, 16), (3, 1)), (Fraction(1, 3), (3, 1, 3)), (Fraction(2, 7), (3, 1, 7))],
)
def test_reciprocal_orbit_of_rationals(x, expected):
    digits = doubling_orbit(ExactRational(x), len(expected))
    assert digits.values == expected
    assert digits.symbols == expected


def test_reciprocal_orbit_terminates_on_dyadic_rationals():
    with pytest.raises(OrbitTerminated):
        doubling_orbit(ExactRational(Fraction(1, 2)), 2)


def test_random_reciprocal_orbit_matches_high_precision_bits():
    x = sample_real(21)
    digits = doubling_orbit(x, 300)
    for step, value in enumerate(digits.values):
        assert value == (1 << 200) // (x.window(step, 200) + 1)


def test_random_reciprocal_orbit_frequencies():
    counts = Counter(doubling_orbit(sample_real(2), 20_000).values)
    assert counts[1] / 20_000 == pytest.approx(1 / 2, abs=0.03)
    assert counts[2] / 20_000 == pytest.approx(1 / 6, abs=0.03)


def test_cylinder_orbit_reads_bits():
    x = sample_real(6)
    bits = x.bit_array(101).tolist()
    level_one = doubling_orbit(x, 100, doubling_system(1))
    assert list(level_one.symbols) == bits[:100]
    assert list(level_one.values) == [1 - b for b in bits[:100]]
    level_two = doubling_orbit(x, 100, doubling_system(2, (0, 1, 2, 3)))
    assert list(level_two.symbols) == [2 * bits[k] + bits[k + 1] for k in range(100)]
    assert level_two.values == level_two.symbols


def test_dyadic_word_measure():
    assert dyadic_word_measure([0], 1) == Fraction(1, 2)
    assert dyadic_word_measure([0, 1], 1) == Fraction(1, 4)
    assert dyadic_word_measure([1, 3], 2) == Fraction(1, 8)
    assert dyadic_word_measure([1, 0], 2) == 0
    with pytest.raises(InvalidSymbol):
        dyadic_word_measure([4], 2)


def test_interval_word_measure():
    partition = ReciprocalPartition(100)
    assert interval_word_measure([2], partition) == Fraction(1, 6)
    assert interval_word_measure([1, 1], partition) == Fraction(1, 4)
    assert interval_word_measure([1, 2, 1], partition) == Fraction(1, 12)
    with pytest.raises(InvalidSymbol):
        interval_word_measure([0], partition)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_cylinder_correlations_vanish_beyond_the_word_length(level):
    partition = dyadic_partition(level)
    width = Fraction(1, 2**level)
    for i in partition.cells():
        for j in partition.cells():
            first, second = partition.interval(i), partition.interval(j)
            for n in range(9):
                overlap = preimage_overlap(first, n, second)
                assert overlap == brute_force_overlap(first, n, second)
                if n >= level:
                    assert overlap == width * width


def test_reciprocal_partition_moments():
    partition = ReciprocalPartition(1000)
    assert partition.truncated_moment(2, 1).value == Fraction(5, 6)
    assert partition.truncated_moment(10, 1).value == sum(Fraction(1, n + 1) for n in range(1, 11))
    assert partition.truncated_moment(10.5, 2).value == sum(Fraction(n, n + 1) for n in range(1, 11))
    assert partition.tail_measure(3.5) == Fraction(1, 4)
    assert partition.tail_measure(0) == 1


def test_harmonic_switches_to_digamma():
    assert harmonic(4) == Fraction(25, 12)
    assert harmonic(600) == pytest.approx(float(sum(Fraction(1, k) for k in range(1, 601))), rel=1e-12)


def test_systems_are_valid():
    validate_system(doubling_reciprocal_system(50))
    validate_system(doubling_system(3))
    with pytest.raises(ValueError, match="needs 4 cell values"):
        dyadic_partition(2, (1, 2))


@pytest.mark.parametrize(("k", "precision"), [(5, 4), (3, 7), (1021, 10), (12345, 20)])
def test_dyadic_rationals_are_exact_before_they_terminate(k, precision):
    x = ExactRational(Fraction(k, 2**precision))
    scale = 2**precision
    expected = tuple(scale // (k * 2**n % scale) for n in range(precision))
    assert doubling_orbit(x, precision).values == expected
    with pytest.raises(OrbitTerminated):
        doubling_orbit(x, precision + 1)
    bits = [(k >> (precision - 1 - n)) & 1 for n in range(precision)]
    assert list(doubling_orbit(x, precision - 1, doubling_system(1)).symbols) == bits[:-1]
    level_three = doubling_orbit(x, precision - 2, doubling_system(3, tuple(range(8))))
    assert list(level_three.symbols) == [4 * bits[n] + 2 * bits[n + 1] + bits[n + 2] for n in range(precision - 2)]


@pytest.mark.parametrize("level", [1, 2, 3])
def test_dyadic_cylinders_split_into_their_children(level):
    symbols = range(2**level)
    for length in range(4):
        for word in itertools.product(symbols, repeat=length):
            children = sum(dyadic_word_measure([*word, s], level) for s in symbols)
            assert children == dyadic_word_measure(list(word), level)
