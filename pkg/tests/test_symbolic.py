import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horseshoe_ifs.symbolic import (
    PeriodicCode,
    Word,
    codes_count_symbol,
    codes_to_symbols,
    count_symbols,
    enumerate_codes,
    enumerate_words,
    is_exceptional,
)


def test_small_enumerations():
    assert [str(w) for w in enumerate_words(1)] == ["0", "1", "2"]
    words = list(enumerate_words(5, (0, 2)))
    assert len(words) == 32 and not any(1 in w.symbols for w in words)


def test_count_with_a_one_at_length_ten():
    codes = enumerate_codes(10)
    assert codes.size == 59049
    assert int((codes_count_symbol(codes, 10, 1) > 0).sum()) == 3**10 - 2**10 == 58025


def test_enumeration_is_complete_and_lexicographic():
    got = [w.symbols for w in enumerate_words(4, (0, 1, 2))]
    assert got == list(itertools.product((0, 1, 2), repeat=4))
    codes = enumerate_codes(6, (0, 2))
    assert np.all(np.diff(codes) > 0)


def test_exceptional_and_counts():
    assert is_exceptional(Word((0, 2, 2, 0)))
    assert not is_exceptional(Word((0, 1, 0)))
    assert all(is_exceptional(w) for w in enumerate_words(6, (0, 2)))
    assert count_symbols(Word((0, 1, 2))) == (1, 1, 1)
    assert count_symbols(Word((2,) * 8)) == (0, 0, 8)


def test_parse_and_render():
    w = Word.parse("02110")
    assert str(w) == "02110" and len(w) == 5
    with pytest.raises(ValueError):
        Word.parse("0131")


@given(st.lists(st.integers(0, 2), min_size=1, max_size=31))
def test_code_round_trip(syms):
    w = Word(tuple(syms))
    assert Word.from_code(w.code, len(w)) == w
    assert sum(count_symbols(w)) == len(w)
    row = codes_to_symbols(np.array([w.code]), len(w))[0]
    assert tuple(row) == w.symbols


def test_periodic_code_least_period():
    assert PeriodicCode(Word.parse("0202")).least_period() == 2
    assert PeriodicCode(Word.parse("0210")).least_period() == 4
