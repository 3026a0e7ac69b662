import itertools
from collections import Counter
from fractions import Fraction

import pytest

from trim_ergodic.exceptions import InvalidSymbol, InvalidSystem
from trim_ergodic.reals import sample_real
from trim_ergodic.systems.base import validate_system
from trim_ergodic.systems.markov import (
    mat_mul,
    markov_orbit,
    markov_system,
    markov_word_measure,
    matrix_powers,
    parse_matrix,
    stationary_distribution,
)


@pytest.fixture
def two_state():
    return markov_system(parse_matrix("1/2,1/2;1/3,2/3"))


def test_parse_matrix():
    assert parse_matrix("1/2,1/2;1,0") == ((Fraction(1, 2), Fraction(1, 2)), (Fraction(1), Fraction(0)))


@pytest.mark.parametrize(
    ("text", "reason"),
    [
        ("1/2,1/3;1/2,1/2", "sums to"),
        ("3/2,-1/2;1/2,1/2", "negative"),
        ("1;1/2,1/2", "entries"),
        ("a,b;c,d", "non-numeric"),
    ],
)
def test_parse_matrix_rejects_non_stochastic(text, reason):
    with pytest.raises(InvalidSystem, match=reason):
        parse_matrix(text)


def test_stationary_distribution():
    assert stationary_distribution(parse_matrix("1/2,1/2;1/3,2/3")) == (Fraction(2, 5), Fraction(3, 5))
    assert stationary_distribution(parse_matrix("0,1;1,0")) == (Fraction(1, 2), Fraction(1, 2))


def test_reducible_chain_has_no_unique_distribution():
    with pytest.raises(InvalidSystem):
        markov_system(parse_matrix("1,0;0,1"))


def test_markov_system(two_state):
    validate_system(two_state)
    assert two_state.partition.measures == (Fraction(2, 5), Fraction(3, 5))
    assert two_state.partition.values == (0, 1)
    assert two_state.observable == "state"


def test_word_measure(two_state):
    assert markov_word_measure(two_state, [0, 1]) == Fraction(1, 5)
    assert markov_word_measure(two_state, [1, 1, 0]) == Fraction(3, 5) * Fraction(2, 3) * Fraction(1, 3)
    total = sum(markov_word_measure(two_state, list(word)) for word in itertools.product((0, 1), repeat=3))
    assert total == 1
    with pytest.raises(InvalidSymbol):
        markov_word_measure(two_state, [0, 2])


def test_matrix_powers(two_state):
    powers = matrix_powers(two_state.transition, 3)
    assert powers[0] == ((1, 0), (0, 1))
    assert powers[1] == two_state.transition
    assert powers[3] == mat_mul(mat_mul(two_state.transition, two_state.transition), two_state.transition)


def test_deterministic_chain_alternates():
    system = markov_system(parse_matrix("0,1;1,0"), values=(Fraction(1, 2), 3))
    digits = markov_orbit(system, sample_real(4), 50)
    assert all(b == 1 - a for a, b in itertools.pairwise(digits.symbols))
    assert set(digits.values) <= {Fraction(1, 2), 3}


def test_orbit_follows_the_transition_law(two_state):
    symbols = markov_orbit(two_state, sample_real(8), 20_000).symbols
    pairs = Counter(itertools.pairwise(symbols))
    from_zero = pairs[(0, 0)] + pairs[(0, 1)]
    assert pairs[(0, 1)] / from_zero == pytest.approx(1 / 2, abs=0.03)
    assert symbols.count(1) / len(symbols) == pytest.approx(3 / 5, abs=0.03)
    assert markov_orbit(two_state, sample_real(8), 100).symbols == symbols[:100]


@pytest.mark.parametrize("rows", ["1/2,1/2;1/3,2/3", "0,1/2,1/2;1/4,1/4,1/2;1/3,1/3,1/3"])
def test_cylinders_split_into_their_children(rows):
    chain = markov_system(parse_matrix(rows))
    states = range(len(chain.transition))
    for length in range(4):
        for word in itertools.product(states, repeat=length):
            word = list(word)
            measure = markov_word_measure(chain, word)
            assert sum(markov_word_measure(chain, [*word, s]) for s in states) == measure
            if word:
                assert sum(markov_word_measure(chain, [s, *word]) for s in states) == measure
